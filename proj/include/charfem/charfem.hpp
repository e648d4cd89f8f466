#pragma once

#include "charfem/analysis.hpp"
#include "charfem/app.hpp"
#include "charfem/errors.hpp"
#include "charfem/fem.hpp"
#include "charfem/geometry.hpp"
#include "charfem/io.hpp"
#include "charfem/mesh.hpp"
#include "charfem/problems.hpp"
#include "charfem/quadrature.hpp"
#include "charfem/scheme.hpp"
#include "charfem/system.hpp"
#include "charfem/transport.hpp"
