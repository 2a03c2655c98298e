#pragma once

// Umbrella header: the whole library in one include.

#include "instaug/backend.hpp"
#include "instaug/backend_factory.hpp"
#include "instaug/coco.hpp"
#include "instaug/dataset.hpp"
#include "instaug/error.hpp"
#include "instaug/hash.hpp"
#include "instaug/image.hpp"
#include "instaug/manifest.hpp"
#include "instaug/metrics.hpp"
#include "instaug/mock_backends.hpp"
#include "instaug/pipeline.hpp"
#include "instaug/png_io.hpp"
#include "instaug/prompt.hpp"
#include "instaug/remote.hpp"
#include "instaug/render.hpp"
#include "instaug/saliency_dataset.hpp"
#include "instaug/scene.hpp"
#include "instaug/voc.hpp"
