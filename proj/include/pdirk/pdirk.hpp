#pragma once

#include "pdirk/core.hpp"
#include "pdirk/harness.hpp"
#include "pdirk/integrator.hpp"
#include "pdirk/problems.hpp"
#include "pdirk/registry.hpp"
#include "pdirk/spectral.hpp"
#include "pdirk/tableau.hpp"
#include "pdirk/tableau_json.hpp"
