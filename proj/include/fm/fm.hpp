#pragma once

#include "fm/behavior/automaton.hpp"
#include "fm/behavior/check.hpp"
#include "fm/behavior/event.hpp"
#include "fm/behavior/gate.hpp"
#include "fm/dsl/canonicalize.hpp"
#include "fm/dsl/parser.hpp"
#include "fm/dsl/printer.hpp"
#include "fm/export/dot.hpp"
#include "fm/export/trace_io.hpp"
#include "fm/history.hpp"
#include "fm/sim/scenario.hpp"
#include "fm/sim/simulate.hpp"
#include "fm/validate.hpp"
