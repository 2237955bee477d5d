#pragma once

#include "flagsel/error.hpp"
#include "flagsel/lexer.hpp"
#include "flagsel/features.hpp"
#include "flagsel/flagspace.hpp"
#include "flagsel/labeling.hpp"
#include "flagsel/campaign/benchmark.hpp"
#include "flagsel/campaign/runner.hpp"
#include "flagsel/campaign/mock_backend.hpp"
#include "flagsel/campaign/process_runner.hpp"
#include "flagsel/campaign/dataset.hpp"
#include "flagsel/campaign/campaign.hpp"
#include "flagsel/models/training_matrix.hpp"
#include "flagsel/models/decision_tree.hpp"
#include "flagsel/models/svc.hpp"
#include "flagsel/models/mlp.hpp"
#include "flagsel/models/model.hpp"
#include "flagsel/predictor.hpp"
