#pragma once

#include "lime/backend.hpp"
#include "lime/core.hpp"
#include "lime/io.hpp"
#include "lime/labeler.hpp"
#include "lime/metrics.hpp"
#include "lime/nli_backend.hpp"
#include "lime/trainer.hpp"
