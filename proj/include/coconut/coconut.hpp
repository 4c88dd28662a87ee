#pragma once

// Umbrella header for the whole engine.

#include "coconut/breakpoints.hpp"
#include "coconut/builder.hpp"
#include "coconut/config.hpp"
#include "coconut/datagen.hpp"
#include "coconut/error.hpp"
#include "coconut/extsort.hpp"
#include "coconut/index_format.hpp"
#include "coconut/index_reader.hpp"
#include "coconut/io.hpp"
#include "coconut/query.hpp"
#include "coconut/raw_dataset.hpp"
#include "coconut/series.hpp"
#include "coconut/summarization.hpp"
