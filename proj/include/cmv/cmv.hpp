#ifndef CMV_CMV_HPP
#define CMV_CMV_HPP

#include "cmv/binary_io.hpp"
#include "cmv/clustering.hpp"
#include "cmv/cmd.hpp"
#include "cmv/config.hpp"
#include "cmv/corpus.hpp"
#include "cmv/embeddings.hpp"
#include "cmv/error.hpp"
#include "cmv/estimates.hpp"
#include "cmv/evaluation.hpp"
#include "cmv/linalg.hpp"
#include "cmv/ot.hpp"
#include "cmv/parallel.hpp"
#include "cmv/pipeline.hpp"
#include "cmv/ppmi.hpp"

#endif  // CMV_CMV_HPP
