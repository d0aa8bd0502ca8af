#include "redsys/services/layer.hpp"

#include "redsys/core/builder.hpp"

namespace redsys::services {

Layer empty_layer(const std::vector<std::string>& keys, std::size_t len) {
  Layer layer;
  for (const auto& k : keys) layer[k].assign(len, std::string());
  return layer;
}

Changeset layer_changeset(const Document& doc, const Layer& desired, const Layer* emitted) {
  std::vector<AttributeRangeRule> rules;
  for (const auto& [key, values] : desired) {
    const std::vector<std::string>* mine = nullptr;
    if (emitted) {
      auto it = emitted->find(key);
      if (it != emitted->end() && it->second.size() == values.size()) mine = &it->second;
    }
    std::size_t i = 0;
    while (i < values.size()) {
      const std::string current = doc.value_at(i, key);
      std::optional<std::string> target;
      if (!values[i].empty()) {
        if (current != values[i]) target = values[i];
      } else if (!current.empty() && (!mine || !(*mine)[i].empty())) {
        target = std::string();
      }
      if (!target) {
        ++i;
        continue;
      }
      // Extend over neighbours that need the same assignment.
      std::size_t j = i + 1;
      while (j < values.size() && values[j] == values[i]) {
        const std::string cur = doc.value_at(j, key);
        const bool same = target->empty()
                              ? !cur.empty() && (!mine || !(*mine)[j].empty())
                              : cur != *target;
        if (!same) break;
        ++j;
      }
      rules.push_back({key, *target, i, j - 1});
      i = j;
    }
  }
  return ranges_to_changeset(rules, doc.size(), doc.pool);
}

Layer transform_layer(const Layer& layer, const Changeset& cs) {
  Layer out;
  for (const auto& [key, values] : layer) {
    std::vector<std::string> moved;
    moved.reserve(cs.new_len);
    std::size_t pos = 0;
    for (const auto& op : cs.ops) {
      switch (op.type) {
        case OpType::kInsert:
          moved.insert(moved.end(), op.len, std::string());
          break;
        case OpType::kDelete:
          pos += op.len;
          break;
        case OpType::kKeep:
          for (std::size_t k = 0; k < op.len && pos + k < values.size(); ++k) moved.push_back(values[pos + k]);
          pos += op.len;
          break;
      }
    }
    for (; pos < values.size(); ++pos) moved.push_back(values[pos]);
    out[key] = std::move(moved);
  }
  return out;
}

LayerTracker::LayerTracker(std::vector<std::string> shared_keys) : keys_(std::move(shared_keys)) { reset(0); }

void LayerTracker::reset(std::size_t len) {
  emitted_ = empty_layer(keys_, len);
  proposed_.reset();
}

Changeset LayerTracker::propose(const Document& doc, const Layer& desired) {
  Changeset cs = layer_changeset(doc, desired, &emitted_);
  proposed_ = desired;
  return cs;
}

void LayerTracker::observe(const Changeset& change) {
  emitted_ = transform_layer(emitted_, change);
  if (proposed_) proposed_ = transform_layer(*proposed_, change);
}

void LayerTracker::accept() {
  if (proposed_) {
    for (const auto& k : keys_) {
      if (auto it = proposed_->find(k); it != proposed_->end()) emitted_[k] = std::move(it->second);
    }
  }
  proposed_.reset();
}

void LayerTracker::discard() { proposed_.reset(); }

}  // namespace redsys::services
