#pragma once

#include "ncelm/config.hpp"
#include "ncelm/dataset.hpp"
#include "ncelm/diagnostics.hpp"
#include "ncelm/elm.hpp"
#include "ncelm/ensemble.hpp"
#include "ncelm/errors.hpp"
#include "ncelm/serialization.hpp"
#include "ncelm/trainer.hpp"
#include "ncelm/types.hpp"
