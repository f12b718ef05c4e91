/*******************************************************************************
 * Copyright (c) 2026 The ntsp contributors.                                   *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

// Instance document <-> Instance. The document layout is described in
// schema/instance.schema.json. Parsing is strict: unknown fields, missing
// fields and wrongly typed values are all rejected.

#include "ntsp/model.hpp"

#include <json.hpp>

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

namespace ntsp {

namespace detail {

using json = nlohmann::json;

class ObjectReader {
public:
  ObjectReader(const json &j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail("expected an object");
  }

  void allow_only(std::initializer_list<std::string_view> keys) const {
    for (const auto &[key, _] : j_.items()) {
      bool ok = false;
      for (auto k : keys) ok = ok || key == k;
      if (!ok) fail("unknown field '" + key + "'");
    }
  }

  bool has(const char *key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const json &at(const char *key) const {
    if (!j_.contains(key)) fail(std::string("missing field '") + key + "'");
    return j_.at(key);
  }

  std::string str(const char *key) const {
    const auto &v = at(key);
    if (!v.is_string()) fail(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
  }

  std::int64_t integer(const char *key) const {
    const auto &v = at(key);
    if (!v.is_number_integer()) fail(std::string("field '") + key + "' must be an integer");
    return v.get<std::int64_t>();
  }

  double number(const char *key) const {
    const auto &v = at(key);
    if (!v.is_number()) fail(std::string("field '") + key + "' must be a number");
    return v.get<double>();
  }

  bool boolean(const char *key, bool fallback) const {
    if (!j_.contains(key)) return fallback;
    const auto &v = j_.at(key);
    if (!v.is_boolean()) fail(std::string("field '") + key + "' must be a boolean");
    return v.get<bool>();
  }

  [[noreturn]] void fail(const std::string &msg) const {
    throw Error(ErrorKind::schema, where_ + ": " + msg);
  }

  const std::string &where() const { return where_; }

private:
  const json &j_;
  std::string where_;
};

template <class T>
std::unordered_map<std::string, std::size_t> id_index(const std::vector<T> &items) {
  std::unordered_map<std::string, std::size_t> map;
  for (std::size_t i = 0; i < items.size(); ++i)
    if (!map.emplace(items[i].id, i).second)
      throw Error(ErrorKind::duplicate, "duplicate id '" + items[i].id + "'");
  return map;
}

inline std::size_t resolve(const std::unordered_map<std::string, std::size_t> &index,
                           const std::string &id, const std::string &where) {
  auto it = index.find(id);
  if (it == index.end())
    throw Error(ErrorKind::dangling_reference, where + ": unknown id '" + id + "'");
  return it->second;
}

inline const json &array_field(const json &doc, const char *key) {
  if (!doc.contains(key)) throw Error(ErrorKind::schema, std::string("missing array '") + key + "'");
  const auto &a = doc.at(key);
  if (!a.is_array()) throw Error(ErrorKind::schema, std::string("'") + key + "' must be an array");
  return a;
}

} // namespace detail

inline Instance parse_instance_json(const nlohmann::json &doc) {
  using detail::ObjectReader;
  if (!doc.is_object()) throw Error(ErrorKind::schema, "instance document must be an object");
  ObjectReader top(doc, "instance");
  top.allow_only({"securities", "balances", "positions", "transactions", "after_links",
                  "cmbs", "spls"});

  InstanceData d;
  std::size_t i = 0;
  for (const auto &j : detail::array_field(doc, "securities")) {
    ObjectReader r(j, "securities[" + std::to_string(i++) + "]");
    r.allow_only({"id", "lot_size", "valuation"});
    d.securities.push_back({r.str("id"), r.integer("lot_size"), r.integer("valuation")});
  }
  const auto sec_index = detail::id_index(d.securities);

  i = 0;
  for (const auto &j : detail::array_field(doc, "balances")) {
    ObjectReader r(j, "balances[" + std::to_string(i++) + "]");
    r.allow_only({"id", "owner", "initial", "is_central_bank"});
    d.balances.push_back({r.str("id"), r.str("owner"), r.integer("initial"),
                          r.boolean("is_central_bank", false)});
  }
  const auto bal_index = detail::id_index(d.balances);

  i = 0;
  for (const auto &j : detail::array_field(doc, "positions")) {
    ObjectReader r(j, "positions[" + std::to_string(i++) + "]");
    r.allow_only({"id", "owner", "security", "initial", "is_issuer"});
    SecurityPosition p;
    p.id = r.str("id");
    p.owner = r.str("owner");
    p.security = detail::resolve(sec_index, r.str("security"), r.where());
    p.initial = r.integer("initial");
    p.is_issuer = r.boolean("is_issuer", false);
    d.positions.push_back(std::move(p));
  }
  const auto pos_index = detail::id_index(d.positions);

  i = 0;
  for (const auto &j : detail::array_field(doc, "transactions")) {
    ObjectReader r(j, "transactions[" + std::to_string(i++) + "]");
    r.allow_only({"id", "kind", "cash_leg", "security_leg", "weight"});
    Transaction t;
    t.id = r.str("id");
    const auto kind = r.str("kind");
    if (kind == "DvP") t.kind = TransactionKind::dvp;
    else if (kind == "FoP") t.kind = TransactionKind::fop;
    else if (kind == "PfoD") t.kind = TransactionKind::pfod;
    else r.fail("kind must be one of DvP, FoP, PfoD");
    t.weight = r.number("weight");
    if (r.has("cash_leg")) {
      ObjectReader c(r.at("cash_leg"), r.where() + ".cash_leg");
      c.allow_only({"amount", "debtor_balance", "creditor_balance"});
      t.cash = CashLeg{c.integer("amount"),
                       detail::resolve(bal_index, c.str("debtor_balance"), c.where()),
                       detail::resolve(bal_index, c.str("creditor_balance"), c.where())};
    }
    if (r.has("security_leg")) {
      ObjectReader s(r.at("security_leg"), r.where() + ".security_leg");
      s.allow_only({"quantity", "security", "debtor_position", "creditor_position"});
      t.security = SecurityLeg{s.integer("quantity"),
                               detail::resolve(sec_index, s.str("security"), s.where()),
                               detail::resolve(pos_index, s.str("debtor_position"), s.where()),
                               detail::resolve(pos_index, s.str("creditor_position"), s.where())};
    }
    d.transactions.push_back(std::move(t));
  }
  const auto tx_index = detail::id_index(d.transactions);

  i = 0;
  for (const auto &j : detail::array_field(doc, "after_links")) {
    ObjectReader r(j, "after_links[" + std::to_string(i++) + "]");
    r.allow_only({"first", "second"});
    d.after_links.push_back({detail::resolve(tx_index, r.str("first"), r.where()),
                             detail::resolve(tx_index, r.str("second"), r.where())});
  }

  i = 0;
  for (const auto &j : detail::array_field(doc, "cmbs")) {
    ObjectReader r(j, "cmbs[" + std::to_string(i++) + "]");
    r.allow_only({"id", "client_balance", "provider_balance", "credit_limit"});
    d.cmbs.push_back({r.str("id"), detail::resolve(bal_index, r.str("client_balance"), r.where()),
                      detail::resolve(bal_index, r.str("provider_balance"), r.where()),
                      r.integer("credit_limit")});
  }
  const auto cmb_index = detail::id_index(d.cmbs);

  i = 0;
  for (const auto &j : detail::array_field(doc, "spls")) {
    ObjectReader r(j, "spls[" + std::to_string(i++) + "]");
    r.allow_only({"id", "cmb", "position", "qmin"});
    d.spls.push_back({r.str("id"), detail::resolve(cmb_index, r.str("cmb"), r.where()),
                      detail::resolve(pos_index, r.str("position"), r.where()),
                      r.integer("qmin")});
  }
  return Instance(std::move(d));
}

inline Instance parse_instance(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    throw Error(ErrorKind::schema, std::string("malformed JSON: ") + e.what());
  }
  return parse_instance_json(doc);
}

inline Instance load_instance(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_instance(ss.str());
}

inline nlohmann::ordered_json to_json(const Instance &inst) {
  using oj = nlohmann::ordered_json;
  const auto &d = inst.data();
  oj doc;
  doc["securities"] = oj::array();
  for (const auto &s : d.securities)
    doc["securities"].push_back({{"id", s.id}, {"lot_size", s.lot_size}, {"valuation", s.valuation}});
  doc["balances"] = oj::array();
  for (const auto &b : d.balances)
    doc["balances"].push_back({{"id", b.id}, {"owner", b.owner}, {"initial", b.initial},
                               {"is_central_bank", b.is_central_bank}});
  doc["positions"] = oj::array();
  for (const auto &p : d.positions)
    doc["positions"].push_back({{"id", p.id}, {"owner", p.owner},
                                {"security", d.securities[p.security].id},
                                {"initial", p.initial}, {"is_issuer", p.is_issuer}});
  doc["transactions"] = oj::array();
  for (const auto &t : d.transactions) {
    oj jt;
    jt["id"] = t.id;
    jt["kind"] = to_string(t.kind);
    if (t.cash)
      jt["cash_leg"] = {{"amount", t.cash->amount},
                        {"debtor_balance", d.balances[t.cash->debtor].id},
                        {"creditor_balance", d.balances[t.cash->creditor].id}};
    if (t.security)
      jt["security_leg"] = {{"quantity", t.security->quantity},
                            {"security", d.securities[t.security->security].id},
                            {"debtor_position", d.positions[t.security->debtor].id},
                            {"creditor_position", d.positions[t.security->creditor].id}};
    jt["weight"] = t.weight;
    doc["transactions"].push_back(std::move(jt));
  }
  doc["after_links"] = oj::array();
  for (const auto &l : d.after_links)
    doc["after_links"].push_back({{"first", d.transactions[l.first].id},
                                  {"second", d.transactions[l.second].id}});
  doc["cmbs"] = oj::array();
  for (const auto &c : d.cmbs)
    doc["cmbs"].push_back({{"id", c.id}, {"client_balance", d.balances[c.client].id},
                           {"provider_balance", d.balances[c.provider].id},
                           {"credit_limit", c.credit_limit}});
  doc["spls"] = oj::array();
  for (const auto &l : d.spls)
    doc["spls"].push_back({{"id", l.id}, {"cmb", d.cmbs[l.cmb].id},
                           {"position", d.positions[l.position].id}, {"qmin", l.qmin}});
  return doc;
}

inline std::string serialize_instance(const Instance &inst) { return to_json(inst).dump(2) + "\n"; }

} // namespace ntsp
