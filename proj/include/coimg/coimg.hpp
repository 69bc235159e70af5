#pragma once

#include "coimg/balancer.hpp"
#include "coimg/combinatorics.hpp"
#include "coimg/composer.hpp"
#include "coimg/config.hpp"
#include "coimg/error.hpp"
#include "coimg/image.hpp"
#include "coimg/manifest.hpp"
#include "coimg/pipeline.hpp"
#include "coimg/selection.hpp"
