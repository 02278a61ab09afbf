#pragma once

#include "nhse/averaging.hpp"
#include "nhse/basin.hpp"
#include "nhse/commands.hpp"
#include "nhse/config.hpp"
#include "nhse/dataset.hpp"
#include "nhse/errors.hpp"
#include "nhse/integrator.hpp"
#include "nhse/model.hpp"
#include "nhse/parallel.hpp"
#include "nhse/poincare.hpp"
#include "nhse/quadrature.hpp"
#include "nhse/shooting.hpp"
#include "nhse/sweep.hpp"
