// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#define BETAPOOL_VERSION_MAJOR 0
#define BETAPOOL_VERSION_MINOR 1
#define BETAPOOL_VERSION_PATCH 0
#define BETAPOOL_VERSION "0.1.0"
