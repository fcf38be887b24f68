#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "relucert/bound.hpp"
#include "relucert/scalar.hpp"

using namespace relucert;

namespace {

Rational rnd_rational(std::mt19937_64& rng) {
  long num = static_cast<long>(rng() % 2001) - 1000;
  long den = 1 + static_cast<long>(rng() % 50);
  return Rational(num, den);
}

}  // namespace

TEST_CASE("rational arithmetic basics") {
  CHECK(Rational(1, 2) + Rational(1, 3) == Rational(5, 6));
  CHECK((Rational(7, 3) * Rational(0)).is_zero());
  CHECK(Rational(-131, 17) * Rational(0) == Rational(0));
  // -2*2 + 2*1 - 0 = -2
  CHECK(Rational(-2) * Rational(2) + Rational(2) * Rational(1) - Rational(0) == Rational(-2));
}

TEST_CASE("rational normalization and comparison") {
  CHECK(Rational(2, 4).str() == "1/2");
  CHECK(Rational(-2, -4).str() == "1/2");
  CHECK(Rational(3, -6).str() == "-1/2");
  CHECK(Rational(6, 3).str() == "2");
  CHECK(cmp_bounds(Rational(1, 3), Rational(333, 1000)) > 0);
  CHECK(cmp_bounds(Rational(1, 3), Rational(1, 3)) == 0);
}

TEST_CASE("rational parsing round trip") {
  for (const char* text : {"0", "-7", "5/6", "-22/7", "1000000000000000000000/3"}) {
    Rational r = Rational::parse(text);
    CHECK(Rational::parse(r.str()) == r);
    CHECK(r.str() == text);
  }
  CHECK(Rational::parse("0.25") == Rational(1, 4));
  CHECK(Rational::parse("-2.75") == Rational(-11, 4));
  CHECK(Rational::parse("3.000") == Rational(3));
  CHECK_THROWS_AS(Rational::parse(""), ParseError);
  CHECK_THROWS_AS(Rational::parse("1/0"), ParseError);
  CHECK_THROWS_AS(Rational::parse("abc"), ParseError);
  CHECK_THROWS_AS(Rational::parse("1.2.3"), ParseError);
}

TEST_CASE("rational field laws hold bit-exactly") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 300; ++i) {
    Rational a = rnd_rational(rng), b = rnd_rational(rng), c = rnd_rational(rng);
    CHECK((a + b) + c == a + (b + c));
    CHECK(a * (b + c) == a * b + a * c);
    CHECK(a + b == b + a);
    CHECK(a * b == b * a);
  }
}

TEST_CASE("serialize then parse is the identity on random rationals") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 300; ++i) {
    Rational r = rnd_rational(rng);
    CHECK(Rational::parse(r.str()) == r);
  }
}

TEST_CASE("float mode bound comparison uses the tolerance") {
  REQUIRE(FloatScalar::epsilon() == 1e-9);
  CHECK(cmp_bounds(FloatScalar(1.0), FloatScalar(1.0 + 1e-12)) == 0);
  CHECK(cmp_bounds(FloatScalar(0.25), FloatScalar(0.0)) > 0);
  CHECK(cmp_bounds(FloatScalar(0.0), FloatScalar(0.25)) < 0);
  CHECK(FloatScalar::parse("1/4").v == 0.25);
}

TEST_CASE("float serialization round trips") {
  for (double d : {0.1, -2.5, 1.0 / 3.0, 12345.6789}) {
    FloatScalar f(d);
    CHECK(FloatScalar::parse(f.str()).v == d);
  }
}

TEST_CASE("float to exact rational conversion is exact") {
  CHECK(to_rational(FloatScalar(0.25)) == Rational(1, 4));
  CHECK(to_rational(FloatScalar(0.1)) != Rational(1, 10));  // 0.1 is not a dyadic rational
}

TEST_CASE("division counter tracks exact divisions") {
  auto before = division_count().load();
  Rational a = Rational(1, 2) + Rational(1, 3);
  Rational b = a * Rational(5, 7) - Rational(2);
  (void)b;
  CHECK(division_count().load() == before);
  Rational c = a / Rational(3, 4);
  (void)c;
  CHECK(division_count().load() == before + 1);
}

TEST_CASE("extended scalars order correctly") {
  auto pinf = Bound<Rational>::pos_inf();
  auto ninf = Bound<Rational>::neg_inf();
  Bound<Rational> five{Rational(5)};
  CHECK(cmp(pinf, five) > 0);
  CHECK(cmp(ninf, five) < 0);
  CHECK(cmp(pinf, pinf) == 0);
  CHECK(cmp(five, Bound<Rational>(Rational(5))) == 0);
  CHECK(Bound<Rational>::parse("+inf").is_pos_inf());
  CHECK(Bound<Rational>::parse("-inf").is_neg_inf());
  CHECK(Bound<Rational>::parse("3/4") == Bound<Rational>(Rational(3, 4)));
}

TEST_CASE("infinities absorb in scaled sums") {
  Bound<Rational> acc{Rational(0)};
  acc.add_scaled(Rational(2), Bound<Rational>(Rational(3)));
  CHECK(acc == Bound<Rational>(Rational(6)));
  acc.add_scaled(Rational(-1), Bound<Rational>::neg_inf());
  CHECK(acc.is_pos_inf());
  acc.add_scaled(Rational(5), Bound<Rational>(Rational(100)));
  CHECK(acc.is_pos_inf());
}
