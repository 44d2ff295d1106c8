#pragma once

#include "conjstruct.hpp"
#include "diffop.hpp"
#include "diffpois.hpp"
#include "gaugefield.hpp"
#include "gl2action.hpp"
#include "hilbert.hpp"
#include "jet.hpp"
#include "liehilb.hpp"
#include "linalg.hpp"
#include "localized.hpp"
#include "mpoly.hpp"
#include "roots.hpp"
#include "scalar.hpp"
#include "suites.hpp"
#include "vars.hpp"
