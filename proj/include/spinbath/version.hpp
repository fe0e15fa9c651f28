#pragma once

#define SPINBATH_VERSION "1.0.0"
