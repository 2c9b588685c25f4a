#pragma once

#include "cdrfe/beamformer.hpp"
#include "cdrfe/cdr.hpp"
#include "cdrfe/config.hpp"
#include "cdrfe/error.hpp"
#include "cdrfe/fft.hpp"
#include "cdrfe/geometry.hpp"
#include "cdrfe/io.hpp"
#include "cdrfe/localization.hpp"
#include "cdrfe/pipeline.hpp"
#include "cdrfe/postfilter.hpp"
#include "cdrfe/simulator.hpp"
#include "cdrfe/spectral_stats.hpp"
#include "cdrfe/stft.hpp"
