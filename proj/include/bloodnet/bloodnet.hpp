#pragma once

#include "bloodnet/errors.hpp"
#include "bloodnet/signal.hpp"
#include "bloodnet/tube_law.hpp"
#include "bloodnet/network.hpp"
#include "bloodnet/constitutive.hpp"
#include "bloodnet/characteristics.hpp"
#include "bloodnet/junctions.hpp"
#include "bloodnet/state.hpp"
#include "bloodnet/wellposedness.hpp"
#include "bloodnet/solver.hpp"
#include "bloodnet/output.hpp"
#include "bloodnet/config.hpp"
#include "bloodnet/verification.hpp"
