#pragma once

#include "cobandit/belief.hpp"
#include "cobandit/cohort_io.hpp"
#include "cobandit/generators.hpp"
#include "cobandit/reference.hpp"
#include "cobandit/report.hpp"
#include "cobandit/simulation.hpp"
#include "cobandit/verify.hpp"
#include "cobandit/whittle.hpp"
