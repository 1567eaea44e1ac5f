#pragma once

#include "canard/bifurcation.hpp"
#include "canard/certificates.hpp"
#include "canard/error.hpp"
#include "canard/integrate.hpp"
#include "canard/orbit.hpp"
#include "canard/polynomial.hpp"
#include "canard/shadow.hpp"
#include "canard/stommel.hpp"
#include "canard/system.hpp"
