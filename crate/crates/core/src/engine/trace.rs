use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::model::{Link, NodeId, PacketId};
use crate::Result;

/// One transmission attempt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub node: NodeId,
    pub packet: PacketId,
    pub to: NodeId,
}

/// A message heard by `receiver`. Only the intended receiver acts on it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Heard {
    pub receiver: NodeId,
    pub sender: NodeId,
    pub packet: PacketId,
    pub intended: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u64,
    pub injected: Vec<PacketId>,
    pub permitted: Vec<NodeId>,
    /// Links with an eligible packet at the tail whose next hop crosses it.
    pub ready: Vec<Link>,
    /// Ready links that would have been heard had the tail used them.
    pub available: Vec<Link>,
    pub attempts: Vec<Attempt>,
    pub heard: Vec<Heard>,
    /// Nodes with two or more transmitting neighbors.
    pub collisions: Vec<NodeId>,
    pub delivered: Vec<PacketId>,
    /// End-of-round queue sizes.
    pub queue_sizes: Vec<usize>,
    pub total: usize,
}

impl RoundRecord {
    /// Successful hops taken this round.
    pub fn successes(&self) -> impl Iterator<Item = &Heard> {
        self.heard.iter().filter(|h| h.intended)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketRecord {
    pub id: PacketId,
    pub injection_round: u64,
    pub itinerary: Vec<NodeId>,
    pub leave_rounds: Vec<u64>,
    pub delivery_round: Option<u64>,
}

impl PacketRecord {
    /// Rounds from injection to delivery, or to `horizon` while undelivered.
    pub fn age(&self, horizon: u64) -> u64 {
        self.delivery_round.unwrap_or(horizon) - self.injection_round
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub node_count: usize,
    pub policy: String,
    pub tie: String,
    pub oracle: String,
    pub hearing: String,
    pub success: String,
    pub horizon: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub meta: TraceMeta,
    pub rounds: Vec<RoundRecord>,
    pub packets: Vec<PacketRecord>,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line<'a> {
    Meta(&'a TraceMeta),
    Round(&'a RoundRecord),
    Packet(&'a PacketRecord),
}

impl ExecutionTrace {
    pub fn horizon(&self) -> u64 {
        self.meta.horizon
    }

    pub fn deliveries(&self) -> usize {
        self.packets.iter().filter(|p| p.delivery_round.is_some()).count()
    }

    /// Largest end-of-round queue at any node.
    pub fn max_queue(&self) -> usize {
        self.rounds.iter().flat_map(|r| r.queue_sizes.iter().copied()).max().unwrap_or(0)
    }

    pub fn max_total(&self) -> usize {
        self.rounds.iter().map(|r| r.total).max().unwrap_or(0)
    }

    /// Largest delivery delay, counting undelivered packets by their age at
    /// the horizon.
    pub fn max_delay(&self) -> u64 {
        self.packets.iter().map(|p| p.age(self.meta.horizon)).max().unwrap_or(0)
    }

    pub fn totals(&self) -> Vec<usize> {
        self.rounds.iter().map(|r| r.total).collect()
    }

    /// Line-delimited JSON: a meta line, one line per round, then one per
    /// packet.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer(&mut out, &Line::Meta(&self.meta))?;
        out.write_all(b"\n")?;
        for r in &self.rounds {
            serde_json::to_writer(&mut out, &Line::Round(r))?;
            out.write_all(b"\n")?;
        }
        for p in &self.packets {
            serde_json::to_writer(&mut out, &Line::Packet(p))?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        buf
    }

    /// `round,Q_total,node0,node1,...`
    pub fn write_metrics_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "round,Q_total")?;
        for v in 0..self.meta.node_count {
            write!(out, ",node{v}")?;
        }
        writeln!(out)?;
        for r in &self.rounds {
            write!(out, "{},{}", r.round, r.total)?;
            for q in &r.queue_sizes {
                write!(out, ",{q}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}
