//! Interconnect wirelength over the microbump site grid.
//!
//! Nets are routed one at a time, widest first, each as a min-cost flow of
//! its wire count between the two chiplet terminals. Edge capacity is shared:
//! a net sees only what earlier nets left over. Each net is length-optimal on
//! what remains; ties between equally short flows are broken away from the
//! regions later nets will want.

mod graph;
mod mcf;

use std::fmt::Write as _;

use serde::Serialize;

use crate::model::Net;
use crate::placement::Placement;

pub use graph::{build_routing_graph, Edge, RouteError, RoutingGraph, Terminal};
use mcf::FlowNetwork;

/// Arc costs are lengths in integer micrometres, scaled so that the
/// tie-break penalty below can never outweigh a 1 µm difference.
const UM_PER_MM: f64 = 1e3;
const LENGTH_SCALE: i64 = 1 << 24;

fn length_cost(mm: f64) -> i64 {
    (mm * UM_PER_MM).round() as i64 * LENGTH_SCALE
}

/// Per edge, how many nets still waiting to be routed have both edge ends
/// inside the bounding box of their chiplet centers. Among equally short
/// routes, a net then prefers edges later nets are unlikely to need.
fn lookahead_penalty(g: &RoutingGraph, boxes: &[[f64; 4]]) -> Vec<i64> {
    let inside = |b: &[f64; 4], s: usize| {
        let (x, y) = g.site_xy(s);
        let tol = 0.5 * g.pitch;
        x >= b[0] - tol && x <= b[2] + tol && y >= b[1] - tol && y <= b[3] + tol
    };
    g.edges
        .iter()
        .map(|e| boxes.iter().filter(|b| inside(b, e.a) && inside(b, e.b)).count() as i64)
        .collect()
}

/// Routed flow of one net.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetRoute {
    pub net: String,
    pub src: String,
    pub dst: String,
    pub wires: u32,
    /// Wires that found a path; equals `wires` unless capacity ran out.
    pub routed: u32,
    /// Σ flow × length over attachments and edges, mm.
    pub length_mm: f64,
    /// (edge, signed flow); positive runs from `edge.a` to `edge.b`.
    pub edge_flows: Vec<(usize, i64)>,
    /// (site, wires) leaving the source terminal.
    pub src_sites: Vec<(usize, u32)>,
    /// (site, wires) entering the sink terminal.
    pub dst_sites: Vec<(usize, u32)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteResult {
    /// In routing order.
    pub nets: Vec<NetRoute>,
    pub total_wirelength: f64,
    /// False when some net could not route all of its wires.
    pub feasible: bool,
    /// Wires on each graph edge after all nets.
    pub edge_usage: Vec<u32>,
}

/// Routing order: descending wire count, ties by net name.
pub fn net_order(nets: &[Net]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..nets.len()).collect();
    order.sort_by(|&a, &b| {
        nets[b]
            .wires
            .cmp(&nets[a].wires)
            .then_with(|| nets[a].name().cmp(&nets[b].name()))
    });
    order
}

/// Routes every net over `g` in [`net_order`].
pub fn route_nets(g: &RoutingGraph, nets: &[Net]) -> Result<RouteResult, RouteError> {
    let n_sites = g.n_sites();
    let mut usage = vec![0u32; g.edges.len()];
    let mut routes = Vec::with_capacity(nets.len());
    let mut feasible = true;

    let order = net_order(nets);
    let mut boxes = Vec::with_capacity(order.len());
    for &idx in &order {
        let net = &nets[idx];
        let find = |name: &String| {
            g.terminal(name)
                .map(|t| &g.terminals[t])
                .ok_or_else(|| RouteError::UnknownEndpoint(name.clone()))
        };
        let (a, b) = (find(&net.src)?, find(&net.dst)?);
        boxes.push([
            a.x_mm.min(b.x_mm),
            a.y_mm.min(b.y_mm),
            a.x_mm.max(b.x_mm),
            a.y_mm.max(b.y_mm),
        ]);
    }

    for (pos, &idx) in order.iter().enumerate() {
        let net = &nets[idx];
        let penalty = lookahead_penalty(g, &boxes[pos + 1..]);
        let src = g
            .terminal(&net.src)
            .ok_or_else(|| RouteError::UnknownEndpoint(net.src.clone()))?;
        let dst = g
            .terminal(&net.dst)
            .ok_or_else(|| RouteError::UnknownEndpoint(net.dst.clone()))?;
        let (s, t) = (n_sites, n_sites + 1);
        let demand = i64::from(net.wires);

        let mut fn_ = FlowNetwork::new(n_sites + 2);
        let mut handles = Vec::with_capacity(g.edges.len());
        for (e, edge) in g.edges.iter().enumerate() {
            let free = i64::from(g.capacity - usage[e]);
            let cost = length_cost(edge.length_mm) + penalty[e];
            let fwd = fn_.add_arc(edge.a, edge.b, free, cost);
            let bwd = fn_.add_arc(edge.b, edge.a, free, cost);
            handles.push((fwd, bwd));
        }
        let src_handles: Vec<_> = g.terminals[src]
            .sites
            .iter()
            .map(|&(site, d)| fn_.add_arc(s, site, demand, length_cost(d)))
            .collect();
        let dst_handles: Vec<_> = g.terminals[dst]
            .sites
            .iter()
            .map(|&(site, d)| fn_.add_arc(site, t, demand, length_cost(d)))
            .collect();

        let sent = fn_.min_cost_flow(s, t, demand);
        if sent < demand {
            feasible = false;
        }

        let mut length = 0.0;
        let mut edge_flows = Vec::new();
        for (e, &(fwd, bwd)) in handles.iter().enumerate() {
            let f = fn_.flow(fwd) - fn_.flow(bwd);
            if f != 0 {
                edge_flows.push((e, f));
                usage[e] += f.unsigned_abs() as u32;
                length += f.unsigned_abs() as f64 * g.edges[e].length_mm;
            }
        }
        let mut attach = |term: usize, hs: &[(usize, usize)]| -> Vec<(usize, u32)> {
            let mut out = Vec::new();
            for (&(site, d), &h) in g.terminals[term].sites.iter().zip(hs) {
                let f = fn_.flow(h);
                if f > 0 {
                    out.push((site, f as u32));
                    length += f as f64 * d;
                }
            }
            out
        };
        let src_sites = attach(src, &src_handles);
        let dst_sites = attach(dst, &dst_handles);

        routes.push(NetRoute {
            net: net.name(),
            src: net.src.clone(),
            dst: net.dst.clone(),
            wires: net.wires,
            routed: sent as u32,
            length_mm: length,
            edge_flows,
            src_sites,
            dst_sites,
        });
    }

    let total_wirelength = routes.iter().map(|r| r.length_mm).sum();
    Ok(RouteResult {
        nets: routes,
        total_wirelength,
        feasible,
        edge_usage: usage,
    })
}

/// Σ wires × Manhattan center distance, mm. A lower bound on the routed
/// length whenever routing succeeds.
pub fn hpwl_estimate(p: &Placement, nets: &[Net]) -> Result<f64, RouteError> {
    let mut total = 0.0;
    for net in nets {
        let a = p
            .get(&net.src)
            .ok_or_else(|| RouteError::UnknownEndpoint(net.src.clone()))?;
        let b = p
            .get(&net.dst)
            .ok_or_else(|| RouteError::UnknownEndpoint(net.dst.clone()))?;
        total += f64::from(net.wires) * ((a.x_mm - b.x_mm).abs() + (a.y_mm - b.y_mm).abs());
    }
    Ok(total)
}

/// Route dump with one row per carrying segment:
/// `net,segment,x0,y0,x1,y1,wires`. Attachment segments run from the chiplet
/// center to the site.
pub fn route_csv(g: &RoutingGraph, r: &RouteResult) -> String {
    let mut out = String::from("net,segment,x0,y0,x1,y1,wires\n");
    for net in &r.nets {
        let src = &g.terminals[g.terminal(&net.src).unwrap()];
        let dst = &g.terminals[g.terminal(&net.dst).unwrap()];
        let mut seg = 0;
        let mut row = |out: &mut String, a: (f64, f64), b: (f64, f64), w: u64| {
            let _ = writeln!(out, "{},{seg},{},{},{},{},{w}", net.net, a.0, a.1, b.0, b.1);
            seg += 1;
        };
        for &(site, w) in &net.src_sites {
            row(&mut out, (src.x_mm, src.y_mm), g.site_xy(site), w.into());
        }
        for &(e, f) in &net.edge_flows {
            let edge = g.edges[e];
            let (a, b) = if f > 0 { (edge.a, edge.b) } else { (edge.b, edge.a) };
            row(&mut out, g.site_xy(a), g.site_xy(b), f.unsigned_abs());
        }
        for &(site, w) in &net.dst_sites {
            row(&mut out, g.site_xy(site), (dst.x_mm, dst.y_mm), w.into());
        }
    }
    out
}
