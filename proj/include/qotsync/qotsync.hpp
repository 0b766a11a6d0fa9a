#pragma once

#include "qotsync/error.hpp"
#include "qotsync/noise.hpp"
#include "qotsync/clock_model.hpp"
#include "qotsync/capture.hpp"
#include "qotsync/estimation.hpp"
#include "qotsync/kalman.hpp"
#include "qotsync/ftsp.hpp"
#include "qotsync/training.hpp"
#include "qotsync/histogram.hpp"
#include "qotsync/sim.hpp"
#include "qotsync/config.hpp"
#include "qotsync/records.hpp"
