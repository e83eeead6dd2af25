#pragma once

#include "revdyn/chaos.hpp"
#include "revdyn/dynamics.hpp"
#include "revdyn/game.hpp"
#include "revdyn/io.hpp"
#include "revdyn/piecewise.hpp"
#include "revdyn/polynomial.hpp"
#include "revdyn/protocols.hpp"
#include "revdyn/scan.hpp"
