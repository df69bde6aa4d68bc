#pragma once

#include "jcctl/analysis.hpp"
#include "jcctl/jc_model.hpp"
#include "jcctl/leo_qsd.hpp"
#include "jcctl/lindblad.hpp"
#include "jcctl/o_grid.hpp"
#include "jcctl/petz.hpp"
#include "jcctl/pulse.hpp"
#include "jcctl/quantum_core.hpp"
#include "jcctl/types.hpp"
