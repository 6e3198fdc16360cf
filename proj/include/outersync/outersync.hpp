#pragma once

#include "errors.hpp"
#include "model.hpp"
#include "analysis.hpp"
#include "triggers.hpp"
#include "trace.hpp"
#include "engine.hpp"
#include "diagnostics.hpp"
#include "presets.hpp"
#include "config.hpp"
#include "io.hpp"
#include "reproduce.hpp"
