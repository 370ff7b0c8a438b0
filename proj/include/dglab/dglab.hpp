#pragma once

#include "dglab/analysis.hpp"
#include "dglab/coefficients.hpp"
#include "dglab/degiorgi.hpp"
#include "dglab/errors.hpp"
#include "dglab/field_io.hpp"
#include "dglab/mesh.hpp"
#include "dglab/quadrature.hpp"
#include "dglab/solver.hpp"
#include "dglab/tensor_io.hpp"
