#pragma once

#include "hlsh/bench.hpp"
#include "hlsh/common.hpp"
#include "hlsh/cost.hpp"
#include "hlsh/dataset.hpp"
#include "hlsh/families.hpp"
#include "hlsh/hll.hpp"
#include "hlsh/index.hpp"
#include "hlsh/io.hpp"
#include "hlsh/oracle.hpp"
#include "hlsh/query.hpp"
