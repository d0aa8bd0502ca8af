#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "redsys/core/changeset.hpp"

namespace redsys::services {

// Desired per-character values for a service's attribute keys; an empty
// string means "no value". Every vector has the document's length.
using Layer = std::map<std::string, std::vector<std::string>>;

Layer empty_layer(const std::vector<std::string>& keys, std::size_t len);

// Attribute-only changeset moving `doc` to `desired` for the layer's keys.
// For keys present in `emitted`, a value is removed only where this layer
// set it before, so several services can share such a key.
Changeset layer_changeset(const Document& doc, const Layer& desired, const Layer* emitted = nullptr);

// Moves a layer through an edit: kept characters keep their values,
// inserted characters get none.
Layer transform_layer(const Layer& layer, const Changeset& cs);

// What a service believes it has set for keys shared with other services,
// tracked through edits. A proposal becomes the emitted layer when its
// submission is acknowledged.
class LayerTracker {
 public:
  explicit LayerTracker(std::vector<std::string> shared_keys);

  const std::vector<std::string>& keys() const noexcept { return keys_; }
  void reset(std::size_t len);

  // Changeset to submit for `desired` over `doc`; remembers it as proposed.
  Changeset propose(const Document& doc, const Layer& desired);

  void observe(const Changeset& change);
  void accept();
  void discard();

  const Layer& emitted() const noexcept { return emitted_; }

 private:
  std::vector<std::string> keys_;
  Layer emitted_;
  std::optional<Layer> proposed_;
};

}  // namespace redsys::services
