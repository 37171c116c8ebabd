#pragma once

#include "llg/diagnostics.hpp"
#include "llg/fastsolve.hpp"
#include "llg/field_io.hpp"
#include "llg/fields.hpp"
#include "llg/mesh.hpp"
#include "llg/order_fit.hpp"
#include "llg/stencils.hpp"
#include "llg/steppers.hpp"
