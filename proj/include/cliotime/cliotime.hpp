#pragma once

#include "cliotime/error.hpp"
#include "cliotime/random.hpp"
#include "cliotime/csv.hpp"
#include "cliotime/logistic.hpp"
#include "cliotime/dataset.hpp"
#include "cliotime/density.hpp"
#include "cliotime/align.hpp"
#include "cliotime/inference.hpp"
#include "cliotime/pipeline.hpp"
#include "cliotime/report.hpp"
#include "cliotime/plot.hpp"
#include "cliotime/benchmark.hpp"
#include "cliotime/run.hpp"
