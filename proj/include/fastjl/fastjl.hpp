#pragma once

#include "fastjl/bench.hpp"
#include "fastjl/dataset.hpp"
#include "fastjl/error.hpp"
#include "fastjl/instances.hpp"
#include "fastjl/parallel.hpp"
#include "fastjl/random.hpp"
#include "fastjl/report.hpp"
#include "fastjl/sparsity.hpp"
#include "fastjl/stats.hpp"
#include "fastjl/suites.hpp"
#include "fastjl/transform.hpp"
#include "fastjl/verify.hpp"
