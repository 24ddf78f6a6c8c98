// Umbrella header.
#pragma once

#include "stepahead/config.hpp"
#include "stepahead/controller.hpp"
#include "stepahead/data.hpp"
#include "stepahead/errors.hpp"
#include "stepahead/harness.hpp"
#include "stepahead/models.hpp"
#include "stepahead/numerics.hpp"
#include "stepahead/optim.hpp"
#include "stepahead/rng.hpp"
