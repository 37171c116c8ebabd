#pragma once

#include "llg/harness/config.hpp"
#include "llg/harness/csv.hpp"
#include "llg/harness/experiments.hpp"
