#pragma once

#include "liouville/common.hpp"
#include "liouville/closed_forms.hpp"
#include "liouville/profile.hpp"
#include "liouville/integrator.hpp"
#include "liouville/ode_engine.hpp"
#include "liouville/regression.hpp"
#include "liouville/linearized_modes.hpp"
#include "liouville/blowup_family.hpp"
#include "liouville/expansion_verify.hpp"
