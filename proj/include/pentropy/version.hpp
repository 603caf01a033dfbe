#pragma once

#define PENTROPY_VERSION_MAJOR 0
#define PENTROPY_VERSION_MINOR 1
#define PENTROPY_VERSION_PATCH 0
#define PENTROPY_VERSION_STRING "0.1.0"
