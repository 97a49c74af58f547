#pragma once

#include "rankinfer/concentration.hpp"
#include "rankinfer/errors.hpp"
#include "rankinfer/experiments.hpp"
#include "rankinfer/ranktest.hpp"
#include "rankinfer/realized.hpp"
#include "rankinfer/report.hpp"
#include "rankinfer/rng.hpp"
#include "rankinfer/simulate.hpp"
#include "rankinfer/specmat.hpp"
#include "rankinfer/stats.hpp"
#include "rankinfer/volofvol.hpp"
