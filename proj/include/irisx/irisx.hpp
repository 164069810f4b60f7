#pragma once

#include "irisx/errors.hpp"
#include "irisx/image.hpp"
#include "irisx/image_io.hpp"
#include "irisx/packed_bits.hpp"
#include "irisx/templates.hpp"
#include "irisx/serialization.hpp"
#include "irisx/geometry.hpp"
#include "irisx/hdbif.hpp"
#include "irisx/embedding.hpp"
#include "irisx/transport.hpp"
#include "irisx/crypts.hpp"
#include "irisx/eval.hpp"
#include "irisx/identify.hpp"
