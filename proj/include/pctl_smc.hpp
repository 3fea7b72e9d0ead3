#pragma once

#include "pctl_smc/random.hpp"
#include "pctl_smc/mdp.hpp"
#include "pctl_smc/pctl.hpp"
#include "pctl_smc/classification.hpp"
#include "pctl_smc/statistics.hpp"
#include "pctl_smc/engine.hpp"
#include "pctl_smc/oracle.hpp"
#include "pctl_smc/models.hpp"
#include "pctl_smc/report.hpp"
