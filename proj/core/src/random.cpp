#include "spongecake/random.hpp"

#include "spongecake/errors.hpp"

namespace spongecake {

double SequenceSource::next() {
  if (pos_ >= values_.size()) throw StreamExhaustedError("uniform source exhausted");
  return values_[pos_++];
}

}  // namespace spongecake
