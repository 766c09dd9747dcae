#include "silp/replay.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace silp {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0)
    throw std::invalid_argument("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  ++pushed_;
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
    return;
  }
  data_[next_] = std::move(t);
  next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n,
                                                      Rng& rng) const {
  if (n > data_.size())
    throw std::logic_error("ReplayBuffer: batch larger than current fill");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = rng.uniform_int(data_.size());
  return idx;
}

namespace {

void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out << ',';
    out.precision(17);
    out << v[i];
  }
}

}  // namespace

void ReplayBuffer::dump_csv(std::ostream& out) const {
  if (data_.empty()) {
    out << "empty\n";
    return;
  }
  const int n = static_cast<int>(data_.front().s.angles.size());
  out << "idx";
  for (int i = 0; i < n + 8; ++i) out << ",s" << i;
  for (int i = 0; i < n; ++i) out << ",a" << i;
  for (int i = 0; i < n + 8; ++i) out << ",sn" << i;
  out << ",r,done,collision\n";
  for (std::size_t row = 0; row < data_.size(); ++row) {
    const Transition& t = data_[row];
    out << row;
    write_vector(out, t.s.flatten());
    write_vector(out, t.a);
    write_vector(out, t.s_next.flatten());
    out << ',';
    out.precision(17);
    out << t.r << ',' << (t.done ? 1 : 0) << ',' << (t.collision ? 1 : 0)
        << '\n';
  }
}

ReplayBuffer ReplayBuffer::load_csv(std::istream& in, int n_joints,
                                    std::size_t capacity) {
  ReplayBuffer buf(capacity);
  std::string line;
  if (!std::getline(in, line)) return buf;  // header (or "empty")
  if (line == "empty") return buf;

  const int state_dim = n_joints + 8;
  const int n_fields = 1 + state_dim + n_joints + state_dim + 3;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<double> vals;
    vals.reserve(n_fields);
    while (std::getline(ss, field, ',')) vals.push_back(std::stod(field));
    if (static_cast<int>(vals.size()) != n_fields)
      throw std::runtime_error("ReplayBuffer::load_csv: bad column count");

    int at = 1;  // skip idx
    Eigen::VectorXd s(state_dim), a(n_joints), sn(state_dim);
    for (int i = 0; i < state_dim; ++i) s[i] = vals[at++];
    for (int i = 0; i < n_joints; ++i) a[i] = vals[at++];
    for (int i = 0; i < state_dim; ++i) sn[i] = vals[at++];
    Transition t;
    t.s = EnvState::unflatten(s, n_joints);
    t.a = a;
    t.s_next = EnvState::unflatten(sn, n_joints);
    t.r = vals[at++];
    t.done = vals[at++] != 0.0;
    t.collision = vals[at++] != 0.0;
    buf.push(std::move(t));
  }
  return buf;
}

}  // namespace silp
