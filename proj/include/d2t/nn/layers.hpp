#pragma once

#include <string>
#include <vector>

#include "d2t/nn/graph.hpp"

namespace d2t::nn {

// Recurrent building blocks shared by the sequence models. Parameters follow
// a prefix naming scheme so several stacks can coexist in one store.

// Gate parameters live at <prefix>{Wz,Wr,Wh,Uz,Ur,Uh,bz,br,bh} with layer
// normalization gains/biases at <prefix>{lnz,lnr,lnh}_{g,b}.
void init_gru_gates(ParamStore& P, const std::string& prefix, int in, int hidden,
                    Rng& rng);
Graph::Node* gru_cell(Graph& G, ParamStore& P, const std::string& prefix,
                      Graph::Node* x, Graph::Node* h);

struct GruEncoding {
  std::vector<Graph::Node*> outs;  // one hidden x B node per input position
  Graph::Node* fwd_end = nullptr;
  Graph::Node* bwd_start = nullptr;
};

// Bidirectional stack under <prefix>{l}{f|b}_... plus a combiner at
// <prefix>{l}_comb. in_dim is the width of the position inputs.
void init_gru_encoder(ParamStore& P, const std::string& prefix, int layers, int in_dim,
                      int hidden, Rng& rng);

// inputs[t] is the embedded batch column block at position t; row_mask[t] is
// 1 x B with 1 for real tokens so padded positions keep their previous state.
GruEncoding gru_encode(Graph& G, ParamStore& P, const std::string& prefix, int layers,
                       double dropout, const std::vector<Graph::Node*>& inputs,
                       const std::vector<Mat>& row_mask, int hidden, Rng& rng);

// Additive attention under <prefix>{W,U,b,v}.
void init_attention(ParamStore& P, const std::string& prefix, int hidden, Rng& rng);

struct GruAttention {
  std::vector<Graph::Node*> wh;        // W @ enc_out per position
  std::vector<Graph::Node*> enc_outs;  // attended values
  Graph::Node* mask = nullptr;         // positions x B additive mask
  Graph::Node* vT = nullptr;
  Graph::Node* att_U = nullptr;
  Graph::Node* att_b = nullptr;
};

GruAttention attention_setup(Graph& G, ParamStore& P, const std::string& prefix,
                             const std::vector<Graph::Node*>& enc_outs, Mat add_mask);
Graph::Node* attention_context(Graph& G, const GruAttention& a, Graph::Node* state);

}  // namespace d2t::nn
