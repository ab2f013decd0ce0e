#pragma once

#include "rrf/answer_matrix.hpp"
#include "rrf/dataset/insights.hpp"
#include "rrf/dataset/profile.hpp"
#include "rrf/dataset/synthetic.hpp"
#include "rrf/ensemble.hpp"
#include "rrf/error.hpp"
#include "rrf/metrics.hpp"
#include "rrf/oracle/backend.hpp"
#include "rrf/oracle/mock.hpp"
#include "rrf/oracle/parse.hpp"
#include "rrf/oracle/prompts.hpp"
#include "rrf/oracle/wire.hpp"
#include "rrf/pipeline/commands.hpp"
#include "rrf/pipeline/config.hpp"
#include "rrf/questgen.hpp"
#include "rrf/refine.hpp"
