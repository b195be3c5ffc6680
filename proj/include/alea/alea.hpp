#pragma once

#include "alea/aleatoric.hpp"
#include "alea/data/csv.hpp"
#include "alea/data/dataset.hpp"
#include "alea/data/kmeans.hpp"
#include "alea/data/series.hpp"
#include "alea/data/synthetic.hpp"
#include "alea/errors.hpp"
#include "alea/eval/selective.hpp"
#include "alea/models/baselines.hpp"
#include "alea/models/model.hpp"
#include "alea/models/record.hpp"
#include "alea/models/scoring.hpp"
#include "alea/models/spec.hpp"
#include "alea/models/train.hpp"
#include "alea/nn/adam.hpp"
#include "alea/nn/checkpoint.hpp"
#include "alea/nn/dense.hpp"
#include "alea/nn/lstm.hpp"
#include "alea/nn/tape.hpp"
