#pragma once

#include "relucert/bound.hpp"
#include "relucert/checker.hpp"
#include "relucert/frontend.hpp"
#include "relucert/gen.hpp"
#include "relucert/lp.hpp"
#include "relucert/proof_io.hpp"
#include "relucert/scalar.hpp"
#include "relucert/search.hpp"
#include "relucert/simplex.hpp"
#include "relucert/tighten.hpp"
