#pragma once

#include "membec/constants.hpp"
#include "membec/spin1.hpp"
#include "membec/schedule.hpp"
#include "membec/functionals.hpp"
#include "membec/grid.hpp"
#include "membec/thermal.hpp"
#include "membec/coherent.hpp"
#include "membec/oracle.hpp"
#include "membec/readout.hpp"
#include "membec/io.hpp"
