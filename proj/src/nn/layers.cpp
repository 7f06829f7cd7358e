#include "d2t/nn/layers.hpp"

namespace d2t::nn {

namespace {
std::string lname(const std::string& a, int i, const std::string& b) {
  return a + std::to_string(i) + b;
}
}  // namespace

void init_gru_gates(ParamStore& P, const std::string& prefix, int in, int hidden,
                    Rng& rng) {
  for (const char* gate : {"Wz", "Wr", "Wh"}) P.glorot(prefix + gate, hidden, in, rng);
  for (const char* gate : {"Uz", "Ur", "Uh"}) P.glorot(prefix + gate, hidden, hidden, rng);
  for (const char* gate : {"bz", "br", "bh"}) P.create(prefix + gate, hidden, 1);
  for (const char* ln : {"lnz", "lnr", "lnh"}) {
    P.create(prefix + ln + std::string("_g"), hidden, 1).value.setOnes();
    P.create(prefix + ln + std::string("_b"), hidden, 1);
  }
}

Graph::Node* gru_cell(Graph& G, ParamStore& P, const std::string& prefix,
                      Graph::Node* x, Graph::Node* h) {
  auto p = [&](const char* n) { return G.param(P.at(prefix + n)); };
  Graph::Node* zp = G.add_colb(G.add(G.matmul(p("Wz"), x), G.matmul(p("Uz"), h)), p("bz"));
  Graph::Node* z = G.sigmoid(G.layer_norm(zp, p("lnz_g"), p("lnz_b")));
  Graph::Node* rp = G.add_colb(G.add(G.matmul(p("Wr"), x), G.matmul(p("Ur"), h)), p("br"));
  Graph::Node* r = G.sigmoid(G.layer_norm(rp, p("lnr_g"), p("lnr_b")));
  Graph::Node* cp =
      G.add_colb(G.add(G.matmul(p("Wh"), x), G.matmul(p("Uh"), G.mul(r, h))), p("bh"));
  Graph::Node* c = G.tanh_(G.layer_norm(cp, p("lnh_g"), p("lnh_b")));
  return G.add(h, G.mul(z, G.sub(c, h)));
}

void init_gru_encoder(ParamStore& P, const std::string& prefix, int layers, int in_dim,
                      int hidden, Rng& rng) {
  for (int l = 0; l < layers; ++l) {
    int in = l == 0 ? in_dim : hidden;
    init_gru_gates(P, lname(prefix, l, "f_"), in, hidden, rng);
    init_gru_gates(P, lname(prefix, l, "b_"), in, hidden, rng);
    P.glorot(lname(prefix, l, "_comb"), hidden, 2 * hidden, rng);
    P.create(lname(prefix, l, "_comb_b"), hidden, 1);
  }
}

GruEncoding gru_encode(Graph& G, ParamStore& P, const std::string& prefix, int layers,
                       double dropout, const std::vector<Graph::Node*>& inputs,
                       const std::vector<Mat>& row_mask, int hidden, Rng& rng) {
  size_t L = inputs.size();
  long B = L == 0 ? 1 : inputs[0]->value.cols();

  std::vector<Graph::Node*> layer_in = inputs;
  std::vector<Graph::Node*> mask_nodes(L);
  for (size_t t = 0; t < L; ++t) mask_nodes[t] = G.input(row_mask[t]);

  GruEncoding enc;
  enc.fwd_end = G.input(Mat::Zero(hidden, B));
  enc.bwd_start = enc.fwd_end;
  for (int l = 0; l < layers; ++l) {
    Graph::Node* h0 = G.input(Mat::Zero(hidden, B));
    std::vector<Graph::Node*> fwd(L), bwd(L);
    Graph::Node* h = h0;
    for (size_t t = 0; t < L; ++t) {
      Graph::Node* hn = gru_cell(G, P, lname(prefix, l, "f_"), layer_in[t], h);
      h = G.add(h, G.mul_rowb(G.sub(hn, h), mask_nodes[t]));
      fwd[t] = h;
    }
    Graph::Node* fwd_end = h;
    h = h0;
    for (size_t t = L; t-- > 0;) {
      Graph::Node* hn = gru_cell(G, P, lname(prefix, l, "b_"), layer_in[t], h);
      h = G.add(h, G.mul_rowb(G.sub(hn, h), mask_nodes[t]));
      bwd[t] = h;
    }
    Graph::Node* bwd_start = h;
    Graph::Node* comb = G.param(P.at(lname(prefix, l, "_comb")));
    Graph::Node* comb_b = G.param(P.at(lname(prefix, l, "_comb_b")));
    for (size_t t = 0; t < L; ++t) {
      Graph::Node* cat = G.concat_rows({fwd[t], bwd[t]});
      layer_in[t] = G.dropout(G.tanh_(G.add_colb(G.matmul(comb, cat), comb_b)), dropout,
                              rng);
    }
    if (l == layers - 1) {
      enc.fwd_end = fwd_end;
      enc.bwd_start = bwd_start;
    }
  }
  enc.outs = layer_in;
  return enc;
}

void init_attention(ParamStore& P, const std::string& prefix, int hidden, Rng& rng) {
  P.glorot(prefix + "W", hidden, hidden, rng);
  P.glorot(prefix + "U", hidden, hidden, rng);
  P.create(prefix + "b", hidden, 1);
  P.glorot(prefix + "v", hidden, 1, rng);
}

GruAttention attention_setup(Graph& G, ParamStore& P, const std::string& prefix,
                             const std::vector<Graph::Node*>& enc_outs, Mat add_mask) {
  GruAttention a;
  Graph::Node* W = G.param(P.at(prefix + "W"));
  for (Graph::Node* e : enc_outs) a.wh.push_back(G.matmul(W, e));
  a.enc_outs = enc_outs;
  a.mask = G.input(std::move(add_mask));
  a.vT = G.transpose(G.param(P.at(prefix + "v")));
  a.att_U = G.param(P.at(prefix + "U"));
  a.att_b = G.param(P.at(prefix + "b"));
  return a;
}

Graph::Node* attention_context(Graph& G, const GruAttention& a, Graph::Node* state) {
  Graph::Node* us = G.matmul(a.att_U, state);
  std::vector<Graph::Node*> rows;
  rows.reserve(a.wh.size());
  for (Graph::Node* wh : a.wh)
    rows.push_back(G.matmul(a.vT, G.tanh_(G.add_colb(G.add(wh, us), a.att_b))));
  Graph::Node* alpha = G.softmax_cols(G.add(G.concat_rows(rows), a.mask));
  Graph::Node* ctx = nullptr;
  for (size_t l = 0; l < a.enc_outs.size(); ++l) {
    Graph::Node* part =
        G.mul_rowb(a.enc_outs[l], G.slice_rows(alpha, static_cast<int>(l), 1));
    ctx = ctx ? G.add(ctx, part) : part;
  }
  return ctx;
}

}  // namespace d2t::nn
