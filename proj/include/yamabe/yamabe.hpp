#pragma once

#include "yamabe/certificate.hpp"
#include "yamabe/chart.hpp"
#include "yamabe/conformal.hpp"
#include "yamabe/curvature.hpp"
#include "yamabe/cylinder.hpp"
#include "yamabe/derivatives.hpp"
#include "yamabe/diagnostics.hpp"
#include "yamabe/errors.hpp"
#include "yamabe/fields.hpp"
#include "yamabe/functional.hpp"
#include "yamabe/integration.hpp"
#include "yamabe/quadrature.hpp"
#include "yamabe/random.hpp"
#include "yamabe/snapshot.hpp"
#include "yamabe/spectral.hpp"
#include "yamabe/version.hpp"
#include "yamabe/weight.hpp"
#include "yamabe/yamabe_solver.hpp"
