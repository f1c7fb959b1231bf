#pragma once

#include "altplan/config.hpp"
#include "altplan/dataset_csv.hpp"
#include "altplan/deopt.hpp"
#include "altplan/lifestress.hpp"
#include "altplan/parallel.hpp"
#include "altplan/planner.hpp"
#include "altplan/random.hpp"
#include "altplan/report.hpp"
#include "altplan/simplex.hpp"
#include "altplan/simulator.hpp"
#include "altplan/weibull_aft.hpp"
