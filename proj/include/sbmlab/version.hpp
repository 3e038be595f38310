#pragma once

#define SBMLAB_VERSION_MAJOR 1
#define SBMLAB_VERSION_MINOR 0
#define SBMLAB_VERSION_PATCH 0
#define SBMLAB_VERSION_STRING "1.0.0"
