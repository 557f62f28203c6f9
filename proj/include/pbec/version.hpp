#pragma once

#define PBEC_VERSION "0.1.0"
