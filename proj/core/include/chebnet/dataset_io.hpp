#pragma once

#include <string>

#include "chebnet/data.hpp"

namespace chebnet {

/// Line-delimited dataset file (JSON per line).
///
/// Line 1 is a header object:
///   {"schema":"chebnet.dataset.v1","task":"node_classification","vocab":7,
///    "n_graphs":N,"splits":{"train":[...],"val":[...],"test":[...]}}
/// Each following line is one graph:
///   {"id":0,"n":12,"edges":[u0,v0,u1,v1,...],"weights":[...],
///    "codes":[...]} with "labels":[...] (per node) or "label":x (per graph);
/// "edges" lists each undirected edge once (u < v); "weights" is omitted when
/// every weight is 1; "features":[[...],...] replaces "codes" for dense data.
///
/// Serialization is canonical, so identical datasets produce identical bytes.
void save_dataset(const std::string& path, const Dataset& ds);

/// Rejects malformed input with "<path>:<line>: <reason>" diagnostics.
Dataset load_dataset(const std::string& path);

std::string dataset_to_string(const Dataset& ds);
Dataset dataset_from_string(const std::string& text, const std::string& origin = "<memory>");

}  // namespace chebnet
