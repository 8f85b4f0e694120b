#pragma once

#include "selfadapt/adaptation.hpp"
#include "selfadapt/clustering.hpp"
#include "selfadapt/dataset.hpp"
#include "selfadapt/decision_tree.hpp"
#include "selfadapt/distribution.hpp"
#include "selfadapt/error.hpp"
#include "selfadapt/pipeline.hpp"
#include "selfadapt/quality.hpp"
#include "selfadapt/robustness.hpp"
#include "selfadapt/similarity_search.hpp"
#include "selfadapt/solution.hpp"
#include "selfadapt/sweep.hpp"
#include "selfadapt/synthetic.hpp"
