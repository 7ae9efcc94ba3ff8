#pragma once

#include "chunkalign/corpus.hpp"
#include "chunkalign/embed.hpp"
#include "chunkalign/error.hpp"
#include "chunkalign/eval.hpp"
#include "chunkalign/loss.hpp"
#include "chunkalign/model.hpp"
#include "chunkalign/net.hpp"
#include "chunkalign/ot.hpp"
#include "chunkalign/rules.hpp"
#include "chunkalign/synthetic.hpp"
#include "chunkalign/train.hpp"
