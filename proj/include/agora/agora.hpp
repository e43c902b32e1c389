#pragma once

#include "agora/accounting.hpp"
#include "agora/atom.hpp"
#include "agora/audit.hpp"
#include "agora/baselines.hpp"
#include "agora/compression.hpp"
#include "agora/error.hpp"
#include "agora/jsonl.hpp"
#include "agora/methods.hpp"
#include "agora/parser.hpp"
#include "agora/portable_scorer.hpp"
#include "agora/scoring.hpp"
#include "agora/simulate.hpp"
#include "agora/stats.hpp"
#include "agora/trajectory.hpp"
#include "agora/utf8.hpp"
