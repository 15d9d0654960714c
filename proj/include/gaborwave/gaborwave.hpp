#pragma once

#include "gaborwave/complex_tensor.hpp"
#include "gaborwave/config.hpp"
#include "gaborwave/errors.hpp"
#include "gaborwave/filterbank.hpp"
#include "gaborwave/gradcheck.hpp"
#include "gaborwave/io.hpp"
#include "gaborwave/layers.hpp"
#include "gaborwave/model.hpp"
#include "gaborwave/ops.hpp"
#include "gaborwave/synthetic.hpp"
#include "gaborwave/tape.hpp"
#include "gaborwave/train.hpp"
