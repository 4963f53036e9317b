#ifndef LOGITCONF_LOGITCONF_HPP
#define LOGITCONF_LOGITCONF_HPP

#include "logitconf/core.hpp"
#include "logitconf/confidence.hpp"
#include "logitconf/calibration.hpp"
#include "logitconf/metrics.hpp"
#include "logitconf/ingestion.hpp"
#include "logitconf/synth.hpp"
#include "logitconf/cli.hpp"

#endif  // LOGITCONF_LOGITCONF_HPP
