#pragma once

#include "rsmmf/errors.hpp"
#include "rsmmf/numerics.hpp"
#include "rsmmf/model.hpp"
#include "rsmmf/csit.hpp"
#include "rsmmf/dof.hpp"
#include "rsmmf/conic.hpp"
#include "rsmmf/wmmse.hpp"
#include "rsmmf/satcom.hpp"
#include "rsmmf/harness.hpp"
