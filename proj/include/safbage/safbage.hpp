#pragma once

#include "safbage/blend.hpp"
#include "safbage/cam.hpp"
#include "safbage/errors.hpp"
#include "safbage/eval/augment.hpp"
#include "safbage/eval/experiment.hpp"
#include "safbage/eval/folds.hpp"
#include "safbage/eval/manifest.hpp"
#include "safbage/eval/metrics.hpp"
#include "safbage/eval/pipeline.hpp"
#include "safbage/eval/reference.hpp"
#include "safbage/eval/source.hpp"
#include "safbage/eval/synthetic.hpp"
#include "safbage/facecrop.hpp"
#include "safbage/image.hpp"
#include "safbage/nnet/checkpoint.hpp"
#include "safbage/nnet/model_spec.hpp"
#include "safbage/nnet/network.hpp"
#include "safbage/nnet/tensor.hpp"
#include "safbage/nnet/train.hpp"
#include "safbage/pnm.hpp"
#include "safbage/rng.hpp"
#include "safbage/saliency.hpp"
