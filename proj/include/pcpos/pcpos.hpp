#pragma once

// Umbrella header for the whole library.

#include "pcpos/errors.hpp"
#include "pcpos/random.hpp"
#include "pcpos/distributions.hpp"
#include "pcpos/copula.hpp"
#include "pcpos/dvine.hpp"
#include "pcpos/estimate.hpp"
#include "pcpos/regression.hpp"
#include "pcpos/signtest.hpp"
#include "pcpos/competitors.hpp"
#include "pcpos/confregion.hpp"
#include "pcpos/dgp.hpp"
#include "pcpos/study.hpp"
#include "pcpos/study_io.hpp"
