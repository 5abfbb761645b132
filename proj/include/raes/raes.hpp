#pragma once

#include "raes/audio.hpp"
#include "raes/error.hpp"
#include "raes/features.hpp"
#include "raes/fft.hpp"
#include "raes/labels.hpp"
#include "raes/metrics/complexity.hpp"
#include "raes/metrics/erle.hpp"
#include "raes/metrics/report.hpp"
#include "raes/metrics/stoi.hpp"
#include "raes/nlms.hpp"
#include "raes/nn/architecture.hpp"
#include "raes/nn/layers.hpp"
#include "raes/nn/model.hpp"
#include "raes/nn/tensor.hpp"
#include "raes/nn/weights.hpp"
#include "raes/pipeline.hpp"
#include "raes/stft.hpp"
#include "raes/synth/dataset.hpp"
#include "raes/synth/distortion.hpp"
#include "raes/synth/mixing.hpp"
#include "raes/synth/rir.hpp"
