#pragma once

#include "moce/core.hpp"
#include "moce/csv_io.hpp"
#include "moce/debias.hpp"
#include "moce/digest.hpp"
#include "moce/distributions.hpp"
#include "moce/expand.hpp"
#include "moce/group_test.hpp"
#include "moce/lasso.hpp"
#include "moce/linalg.hpp"
#include "moce/pipeline.hpp"
#include "moce/report.hpp"
#include "moce/rng.hpp"
#include "moce/sim.hpp"
