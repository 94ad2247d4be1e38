//! Group formation protocol.
//!
//! Every peer starts as a singleton group. Each round, groups with an online
//! representative gossip with their neighbour groups to maintain a bounded
//! knownlist of the best-scoring partners they have heard of (exploration),
//! then walk that list inviting partners to merge (grouping). An invited group
//! accepts only if the inviter beats every other candidate it knows about and
//! the merged group fits under the size cap. Merging mints a fresh group id
//! and retires both parents.
//!
//! All state lives in [`World`], which is mutated serially; there is no real
//! transport, so every invitation is answered within the round it is sent.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::availability::{group_vector, merge_vectors, AvailabilityError, AvailabilityVector};
use crate::ids::{GroupId, PeerId};
use crate::metrics::{contribution, Contribution, GroupSummary, Metric};

/// Absolute tolerance for stored-vs-recomputed group vectors.
pub const VECTOR_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("group {0} does not exist")]
    UnknownGroup(GroupId),
    #[error("peer {peer} is not a member of group {group}")]
    NotAMember { group: GroupId, peer: PeerId },
    #[error("merged size {size} exceeds the cap of {max}")]
    SizeExceeded { size: usize, max: usize },
    #[error("cannot merge group {0} with itself")]
    SelfMerge(GroupId),
    #[error("invalid protocol setup: {0}")]
    InvalidSetup(String),
    #[error(transparent)]
    Availability(#[from] AvailabilityError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    pub metric: Metric,
    /// Maximum knownlist length.
    pub knowncount: usize,
    /// Hard cap on roster size; merged groups may reach it exactly.
    pub max_group_size: usize,
    /// Candidates scoring at or below this are never invited.
    pub min_contribution: f64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            metric: Metric::RatioExponent,
            knowncount: 10,
            max_group_size: 6,
            min_contribution: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Peer {
    pub id: PeerId,
    pub base_vector: AvailabilityVector,
    /// Overlay links, sorted ascending.
    pub neighbors: Vec<PeerId>,
    pub group: GroupId,
    /// Monotone stamp of when the peer joined its current group.
    pub join_order: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RosterEntry {
    pub peer: PeerId,
    pub base_vector: AvailabilityVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnownEntry {
    pub group_id: GroupId,
    pub size: usize,
    pub vector: AvailabilityVector,
    pub contribution: Contribution,
}

impl KnownEntry {
    pub fn summary(&self) -> GroupSummary {
        GroupSummary {
            group_id: self.group_id,
            size: self.size,
            vector: self.vector.clone(),
        }
    }
}

/// Bounded candidate cache sorted by contribution (descending), ties by
/// ascending group id.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownList {
    capacity: usize,
    entries: Vec<KnownEntry>,
}

impl KnownList {
    pub fn new(capacity: usize) -> Self {
        KnownList {
            capacity,
            entries: Vec::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn entries(&self) -> &[KnownEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: GroupId) -> bool {
        self.entries.iter().any(|e| e.group_id == id)
    }

    pub fn remove(&mut self, id: GroupId) -> bool {
        let before = self.entries.len();
        self.entries.retain(|e| e.group_id != id);
        before != self.entries.len()
    }

    pub fn retain<F: FnMut(&KnownEntry) -> bool>(&mut self, f: F) {
        self.entries.retain(f);
    }

    /// Best contribution among entries other than `excluded`; `-inf` if none.
    pub fn max_contribution_excluding(&self, excluded: GroupId) -> f64 {
        self.best_excluding(excluded)
            .map_or(f64::NEG_INFINITY, |e| e.contribution.value)
    }

    /// First entry in list order that is not `excluded`.
    pub fn best_excluding(&self, excluded: GroupId) -> Option<&KnownEntry> {
        self.entries.iter().find(|e| e.group_id != excluded)
    }

    /// Whether a candidate scoring `value` would rank ahead of every entry
    /// other than itself, using the list's own order (higher score first,
    /// then lower id).
    pub fn outranks_all(&self, candidate: GroupId, value: f64) -> bool {
        match self.best_excluding(candidate) {
            None => true,
            Some(best) => {
                value > best.contribution.value || (value == best.contribution.value && candidate < best.group_id)
            }
        }
    }

    fn sort_and_truncate(&mut self) {
        self.entries.sort_by(|a, b| {
            b.contribution
                .value
                .total_cmp(&a.contribution.value)
                .then(a.group_id.cmp(&b.group_id))
        });
        self.entries.truncate(self.capacity);
    }

    pub fn is_sorted(&self) -> bool {
        self.entries.windows(2).all(|w| {
            let (a, b) = (&w[0], &w[1]);
            a.contribution.value > b.contribution.value
                || (a.contribution.value == b.contribution.value && a.group_id < b.group_id)
        })
    }

    /// Scores `candidates` against `owner` and keeps the best `capacity`
    /// entries overall. Later candidates overwrite earlier information about
    /// the same group. Candidates naming the owner, failing `exists`, or too
    /// large to merge with the owner are ignored.
    pub fn absorb<I, F>(
        &mut self,
        owner: &GroupSummary,
        candidates: I,
        params: &ProtocolParams,
        exists: F,
    ) -> Result<(), AvailabilityError>
    where
        I: IntoIterator<Item = GroupSummary>,
        F: Fn(GroupId) -> bool,
    {
        for cand in candidates {
            if cand.group_id == owner.group_id
                || owner.size + cand.size > params.max_group_size
                || !exists(cand.group_id)
            {
                continue;
            }
            if let Some(existing) = self.entries.iter_mut().find(|e| e.group_id == cand.group_id) {
                if existing.size == cand.size && existing.vector == cand.vector {
                    continue;
                }
                existing.contribution = contribution(params.metric, owner, &cand)?;
                existing.size = cand.size;
                existing.vector = cand.vector;
                continue;
            }
            let c = contribution(params.metric, owner, &cand)?;
            self.entries.push(KnownEntry {
                group_id: cand.group_id,
                size: cand.size,
                vector: cand.vector,
                contribution: c,
            });
        }
        self.sort_and_truncate();
        Ok(())
    }

    /// Recomputes every contribution against a changed owner, dropping
    /// entries that no longer fit.
    pub fn rescore(&mut self, owner: &GroupSummary, params: &ProtocolParams) -> Result<(), AvailabilityError> {
        let old = std::mem::take(&mut self.entries);
        self.absorb(owner, old.into_iter().map(|e| e.summary()), params, |_| true)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub id: GroupId,
    pub members: Vec<RosterEntry>,
    pub vector: AvailabilityVector,
    /// Set while the group is committed to a merge this round.
    pub locked: bool,
    pub knownlist: KnownList,
}

impl Group {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn summary(&self) -> GroupSummary {
        GroupSummary {
            group_id: self.id,
            size: self.size(),
            vector: self.vector.clone(),
        }
    }

    pub fn contains(&self, peer: PeerId) -> bool {
        self.members.iter().any(|m| m.peer == peer)
    }

    pub fn member_vectors(&self) -> impl Iterator<Item = &AvailabilityVector> {
        self.members.iter().map(|m| &m.base_vector)
    }
}

/// What a group sends in a request or reply during exploration.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub summary: GroupSummary,
    pub knownlist: Vec<GroupSummary>,
}

impl Bundle {
    /// Knownlist entries first, then the sender itself, so first-hand
    /// information wins when both are present.
    pub fn candidates(&self) -> impl Iterator<Item = GroupSummary> + '_ {
        self.knownlist
            .iter()
            .cloned()
            .chain(std::iter::once(self.summary.clone()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Request(Bundle),
    Reply(Bundle),
    GroupInvitation {
        inviter: GroupSummary,
        contribution: Contribution,
    },
    Acceptance,
    Denial,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MessageStats {
    pub requests: u64,
    pub replies: u64,
    pub invitations: u64,
    pub acceptances: u64,
    pub denials: u64,
    pub stale_candidates: u64,
}

impl MessageStats {
    pub fn total(&self) -> u64 {
        self.requests + self.replies + self.invitations + self.acceptances + self.denials
    }

    fn record(&mut self, message: &Message) {
        match message {
            Message::Request(_) => self.requests += 1,
            Message::Reply(_) => self.replies += 1,
            Message::GroupInvitation { .. } => self.invitations += 1,
            Message::Acceptance => self.acceptances += 1,
            Message::Denial => self.denials += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeOutcome {
    Merged {
        inviter: GroupId,
        invitee: GroupId,
        new_group: GroupId,
    },
    Unchanged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LeaveOutcome {
    /// The shrunken group, or `None` if the leaver was its last member.
    pub remaining: Option<GroupId>,
    /// Fresh singleton holding the leaving peer.
    pub singleton: GroupId,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InvariantViolation {
    PeerUnassigned(PeerId),
    PeerInSeveralGroups(PeerId),
    MembershipMismatch {
        peer: PeerId,
        recorded: GroupId,
        actual: GroupId,
    },
    EmptyGroup(GroupId),
    Oversize {
        group: GroupId,
        size: usize,
    },
    VectorDrift {
        group: GroupId,
        error: f64,
    },
    StaleEntry {
        group: GroupId,
        entry: GroupId,
    },
    SelfEntry(GroupId),
    UnsortedKnownlist(GroupId),
    KnownlistOverflow(GroupId),
    AsymmetricLink(PeerId, PeerId),
}

impl fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// The member that joined last among those currently online.
pub fn representative<F>(group: &Group, peers: &[Peer], online: F) -> Option<PeerId>
where
    F: Fn(PeerId) -> bool,
{
    group
        .members
        .iter()
        .map(|m| m.peer)
        .filter(|p| online(*p))
        .max_by_key(|p| peers[p.index()].join_order)
}

/// Groups owning any peer adjacent to a member of `group`.
pub fn group_neighbors(group: &Group, peers: &[Peer]) -> BTreeSet<GroupId> {
    group
        .members
        .iter()
        .flat_map(|m| peers[m.peer.index()].neighbors.iter())
        .map(|n| peers[n.index()].group)
        .filter(|g| *g != group.id)
        .collect()
}

/// One exploration pass for `owner`: the returned list merges `current`
/// with every group heard about through `contacts`.
pub fn explore<F>(
    owner: &GroupSummary,
    current: &KnownList,
    contacts: &[Bundle],
    params: &ProtocolParams,
    exists: F,
) -> Result<KnownList, AvailabilityError>
where
    F: Fn(GroupId) -> bool,
{
    let mut list = current.clone();
    list.retain(|e| e.group_id != owner.group_id && exists(e.group_id));
    for bundle in contacts {
        list.absorb(owner, bundle.candidates(), params, &exists)?;
    }
    Ok(list)
}

/// Mutable world state shared by every group.
#[derive(Debug, Clone)]
pub struct World {
    slots: usize,
    params: ProtocolParams,
    peers: Vec<Peer>,
    groups: BTreeMap<GroupId, Group>,
    online: Vec<bool>,
    next_group: u64,
    next_join: u64,
    stats: MessageStats,
}

impl World {
    /// Every peer starts online as its own singleton group; group ids follow
    /// peer order.
    pub fn new(
        vectors: Vec<AvailabilityVector>,
        adjacency: Vec<Vec<PeerId>>,
        params: ProtocolParams,
    ) -> Result<World, ProtocolError> {
        if vectors.is_empty() {
            return Err(ProtocolError::InvalidSetup("no peers".into()));
        }
        if adjacency.len() != vectors.len() {
            return Err(ProtocolError::InvalidSetup(format!(
                "{} adjacency lists for {} peers",
                adjacency.len(),
                vectors.len()
            )));
        }
        if params.max_group_size < 2 {
            return Err(ProtocolError::InvalidSetup("max group size must be at least 2".into()));
        }
        if params.knowncount == 0 {
            return Err(ProtocolError::InvalidSetup("knowncount must be positive".into()));
        }
        let slots = vectors[0].len();
        let n = vectors.len();
        let mut peers = Vec::with_capacity(n);
        let mut groups = BTreeMap::new();
        for (i, (vector, mut neighbors)) in vectors.into_iter().zip(adjacency).enumerate() {
            if vector.len() != slots {
                return Err(AvailabilityError::LengthMismatch {
                    expected: slots,
                    found: vector.len(),
                }
                .into());
            }
            neighbors.sort();
            neighbors.dedup();
            if neighbors.iter().any(|p| p.index() >= n || p.index() == i) {
                return Err(ProtocolError::InvalidSetup(format!("peer {i} has an invalid link")));
            }
            let vector = vector.clamped();
            let id = PeerId(i as u32);
            let gid = GroupId(i as u64);
            groups.insert(
                gid,
                Group {
                    id: gid,
                    members: vec![RosterEntry {
                        peer: id,
                        base_vector: vector.clone(),
                    }],
                    vector: vector.clone(),
                    locked: false,
                    knownlist: KnownList::new(params.knowncount),
                },
            );
            peers.push(Peer {
                id,
                base_vector: vector,
                neighbors,
                group: gid,
                join_order: i as u64,
            });
        }
        Ok(World {
            slots,
            params,
            peers,
            groups,
            online: vec![true; n],
            next_group: n as u64,
            next_join: n as u64,
            stats: MessageStats::default(),
        })
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn peers(&self) -> &[Peer] {
        &self.peers
    }

    pub fn peer(&self, id: PeerId) -> &Peer {
        &self.peers[id.index()]
    }

    pub fn groups(&self) -> impl Iterator<Item = &Group> {
        self.groups.values()
    }

    pub fn group(&self, id: GroupId) -> Option<&Group> {
        self.groups.get(&id)
    }

    pub fn group_ids(&self) -> Vec<GroupId> {
        self.groups.keys().copied().collect()
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn stats(&self) -> MessageStats {
        self.stats
    }

    pub fn is_online(&self, peer: PeerId) -> bool {
        self.online[peer.index()]
    }

    pub fn set_online(&mut self, online: Vec<bool>) {
        assert_eq!(online.len(), self.peers.len(), "presence vector length");
        self.online = online;
    }

    pub fn set_all_online(&mut self) {
        self.online.iter_mut().for_each(|o| *o = true);
    }

    pub fn representative(&self, id: GroupId) -> Option<PeerId> {
        let group = self.groups.get(&id)?;
        representative(group, &self.peers, |p| self.online[p.index()])
    }

    pub fn has_representative(&self, id: GroupId) -> bool {
        self.representative(id).is_some()
    }

    pub fn group_neighbors(&self, id: GroupId) -> BTreeSet<GroupId> {
        self.groups
            .get(&id)
            .map(|g| group_neighbors(g, &self.peers))
            .unwrap_or_default()
    }

    pub fn summary(&self, id: GroupId) -> Option<GroupSummary> {
        self.groups.get(&id).map(Group::summary)
    }

    fn bundle(&self, id: GroupId) -> Option<Bundle> {
        let group = self.groups.get(&id)?;
        Some(Bundle {
            summary: group.summary(),
            knownlist: group.knownlist.entries().iter().map(KnownEntry::summary).collect(),
        })
    }

    fn absorb_into(&mut self, target: GroupId, bundle: &Bundle) -> Result<(), ProtocolError> {
        let Some(mut group) = self.groups.remove(&target) else {
            return Ok(());
        };
        let owner = group.summary();
        let groups = &self.groups;
        let result = group
            .knownlist
            .absorb(&owner, bundle.candidates(), &self.params, |g| groups.contains_key(&g));
        self.groups.insert(target, group);
        result.map_err(Into::into)
    }

    /// Exploration for one group: a request/reply exchange with every online
    /// neighbour group, in ascending id order. Both sides update their
    /// knownlists. Returns the number of messages sent.
    pub fn explore_group(&mut self, id: GroupId) -> Result<u64, ProtocolError> {
        if !self.has_representative(id) {
            return Ok(0);
        }
        let before = self.stats.total();
        for contact in self.group_neighbors(id) {
            if !self.has_representative(contact) {
                continue;
            }
            let Some(mine) = self.bundle(id) else { break };
            let request = Message::Request(mine);
            self.stats.record(&request);
            if let Message::Request(b) = &request {
                self.absorb_into(contact, b)?;
            }
            let Some(theirs) = self.bundle(contact) else { continue };
            let reply = Message::Reply(theirs);
            self.stats.record(&reply);
            if let Message::Reply(b) = &reply {
                self.absorb_into(id, b)?;
            }
        }
        Ok(self.stats.total() - before)
    }

    /// Invitee side of an invitation.
    pub fn reply_invitation(&mut self, invitee: GroupId, inviter: &GroupSummary, offer: Contribution) -> Message {
        let online = self.has_representative(invitee);
        let max = self.params.max_group_size;
        let Some(group) = self.groups.get_mut(&invitee) else {
            return Message::Denial;
        };
        if group.locked || !online {
            return Message::Denial;
        }
        if group.knownlist.outranks_all(inviter.group_id, offer.value) && inviter.size + group.size() <= max {
            group.locked = true;
            Message::Acceptance
        } else {
            Message::Denial
        }
    }

    /// Inviter side: walk the knownlist best-first, inviting until someone
    /// accepts, then merge.
    pub fn make_group(&mut self, id: GroupId) -> Result<MergeOutcome, ProtocolError> {
        let Some(group) = self.groups.get(&id) else {
            return Err(ProtocolError::UnknownGroup(id));
        };
        if group.locked || !self.has_representative(id) {
            return Ok(MergeOutcome::Unchanged);
        }
        let owner = group.summary();
        let candidates: Vec<GroupId> = group.knownlist.entries().iter().map(|e| e.group_id).collect();
        for cand in candidates {
            let Some(target) = self.summary(cand) else {
                self.stats.stale_candidates += 1;
                if let Some(g) = self.groups.get_mut(&id) {
                    g.knownlist.remove(cand);
                }
                continue;
            };
            if owner.size + target.size > self.params.max_group_size {
                continue;
            }
            let offer = contribution(self.params.metric, &owner, &target)?;
            if offer.value <= self.params.min_contribution {
                continue;
            }
            let invitation = Message::GroupInvitation {
                inviter: owner.clone(),
                contribution: offer,
            };
            self.stats.record(&invitation);
            let answer = self.reply_invitation(cand, &owner, offer);
            self.stats.record(&answer);
            if answer == Message::Acceptance {
                let new_group = self.merge_group(id, cand)?;
                return Ok(MergeOutcome::Merged {
                    inviter: id,
                    invitee: cand,
                    new_group,
                });
            }
        }
        Ok(MergeOutcome::Unchanged)
    }

    fn fresh_group_id(&mut self) -> GroupId {
        let id = GroupId(self.next_group);
        self.next_group += 1;
        id
    }

    /// Coalesces `inviter` and `invitee` into a new group with a fresh id.
    ///
    /// Inviter members keep their relative order and come first; invitee
    /// members are stamped later, so they win representative ties. The new
    /// group stays locked until the round ends.
    pub fn merge_group(&mut self, inviter: GroupId, invitee: GroupId) -> Result<GroupId, ProtocolError> {
        if inviter == invitee {
            return Err(ProtocolError::SelfMerge(inviter));
        }
        let gi = self.groups.get(&inviter).ok_or(ProtocolError::UnknownGroup(inviter))?;
        let gm = self.groups.get(&invitee).ok_or(ProtocolError::UnknownGroup(invitee))?;
        let size = gi.size() + gm.size();
        if size > self.params.max_group_size {
            return Err(ProtocolError::SizeExceeded {
                size,
                max: self.params.max_group_size,
            });
        }
        let vector = merge_vectors(&gi.vector, &gm.vector)?;
        let gi = self.groups.remove(&inviter).expect("checked above");
        let gm = self.groups.remove(&invitee).expect("checked above");
        let new_id = self.fresh_group_id();

        let mut members = Vec::with_capacity(size);
        for parent in [&gi, &gm] {
            let mut roster = parent.members.clone();
            roster.sort_by_key(|m| self.peers[m.peer.index()].join_order);
            for m in roster {
                let peer = &mut self.peers[m.peer.index()];
                peer.group = new_id;
                peer.join_order = self.next_join;
                self.next_join += 1;
                members.push(m);
            }
        }

        let mut group = Group {
            id: new_id,
            members,
            vector,
            locked: true,
            knownlist: KnownList::new(self.params.knowncount),
        };
        let owner = group.summary();
        let inherited = gi
            .knownlist
            .entries()
            .iter()
            .chain(gm.knownlist.entries())
            .filter(|e| e.group_id != inviter && e.group_id != invitee)
            .map(KnownEntry::summary);
        let groups = &self.groups;
        group
            .knownlist
            .absorb(&owner, inherited, &self.params, |g| groups.contains_key(&g))?;
        self.groups.insert(new_id, group);
        Ok(new_id)
    }

    /// Removes `peer` from `group` after its availability pattern changed and
    /// re-homes it in a fresh singleton with `new_vector`.
    pub fn leave_group(
        &mut self,
        group: GroupId,
        peer: PeerId,
        new_vector: AvailabilityVector,
    ) -> Result<LeaveOutcome, ProtocolError> {
        if new_vector.len() != self.slots {
            return Err(AvailabilityError::LengthMismatch {
                expected: self.slots,
                found: new_vector.len(),
            }
            .into());
        }
        let g = self.groups.get_mut(&group).ok_or(ProtocolError::UnknownGroup(group))?;
        let Some(pos) = g.members.iter().position(|m| m.peer == peer) else {
            return Err(ProtocolError::NotAMember { group, peer });
        };
        g.members.remove(pos);
        let remaining = if g.members.is_empty() {
            self.groups.remove(&group);
            None
        } else {
            g.vector = group_vector(g.member_vectors())?;
            let owner = g.summary();
            g.knownlist.rescore(&owner, &self.params)?;
            Some(group)
        };

        let vector = new_vector.clamped();
        let singleton = self.fresh_group_id();
        let p = &mut self.peers[peer.index()];
        p.base_vector = vector.clone();
        p.group = singleton;
        p.join_order = self.next_join;
        self.next_join += 1;
        self.groups.insert(
            singleton,
            Group {
                id: singleton,
                members: vec![RosterEntry {
                    peer,
                    base_vector: vector.clone(),
                }],
                vector,
                locked: false,
                knownlist: KnownList::new(self.params.knowncount),
            },
        );
        Ok(LeaveOutcome { remaining, singleton })
    }

    /// Round boundary: active groups drop knownlist entries naming groups
    /// that no longer exist, and every lock is released. Groups without an
    /// online representative are left untouched.
    pub fn end_round(&mut self) {
        let live: BTreeSet<GroupId> = self.groups.keys().copied().collect();
        let active: Vec<GroupId> = live.iter().copied().filter(|g| self.has_representative(*g)).collect();
        for id in active {
            if let Some(g) = self.groups.get_mut(&id) {
                g.knownlist.retain(|e| live.contains(&e.group_id));
            }
        }
        for g in self.groups.values_mut() {
            g.locked = false;
        }
    }

    /// Checks every structural invariant. Knownlist hygiene is only checked
    /// for groups that currently have an online representative.
    pub fn check_invariants(&self) -> Vec<InvariantViolation> {
        let mut violations = Vec::new();
        let mut owner: Vec<Option<GroupId>> = vec![None; self.peers.len()];
        for g in self.groups.values() {
            if g.members.is_empty() {
                violations.push(InvariantViolation::EmptyGroup(g.id));
                continue;
            }
            if g.size() > self.params.max_group_size {
                violations.push(InvariantViolation::Oversize {
                    group: g.id,
                    size: g.size(),
                });
            }
            for m in &g.members {
                let slot = &mut owner[m.peer.index()];
                if slot.is_some() {
                    violations.push(InvariantViolation::PeerInSeveralGroups(m.peer));
                }
                *slot = Some(g.id);
            }
            match group_vector(g.members.iter().map(|m| &self.peers[m.peer.index()].base_vector)) {
                Ok(expected) => {
                    let error = expected.max_abs_diff(&g.vector).unwrap_or(f64::INFINITY);
                    if error > VECTOR_TOLERANCE {
                        violations.push(InvariantViolation::VectorDrift { group: g.id, error });
                    }
                }
                Err(_) => violations.push(InvariantViolation::VectorDrift {
                    group: g.id,
                    error: f64::INFINITY,
                }),
            }
            if g.knownlist.len() > g.knownlist.capacity() {
                violations.push(InvariantViolation::KnownlistOverflow(g.id));
            }
            if !g.knownlist.is_sorted() {
                violations.push(InvariantViolation::UnsortedKnownlist(g.id));
            }
            if g.knownlist.contains(g.id) {
                violations.push(InvariantViolation::SelfEntry(g.id));
            }
            if self.has_representative(g.id) {
                for e in g.knownlist.entries() {
                    if !self.groups.contains_key(&e.group_id) {
                        violations.push(InvariantViolation::StaleEntry {
                            group: g.id,
                            entry: e.group_id,
                        });
                    }
                }
            }
        }
        for (peer, slot) in self.peers.iter().zip(&owner) {
            match slot {
                None => violations.push(InvariantViolation::PeerUnassigned(peer.id)),
                Some(actual) if *actual != peer.group => violations.push(InvariantViolation::MembershipMismatch {
                    peer: peer.id,
                    recorded: peer.group,
                    actual: *actual,
                }),
                _ => {}
            }
            for n in &peer.neighbors {
                if self.peers[n.index()].neighbors.binary_search(&peer.id).is_err() {
                    violations.push(InvariantViolation::AsymmetricLink(peer.id, *n));
                }
            }
        }
        violations
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(values: &[f64]) -> AvailabilityVector {
        AvailabilityVector::new(values.to_vec()).unwrap()
    }

    fn params(max: usize) -> ProtocolParams {
        ProtocolParams {
            max_group_size: max,
            ..ProtocolParams::default()
        }
    }

    fn isolated(vectors: Vec<AvailabilityVector>, p: ProtocolParams) -> World {
        let n = vectors.len();
        World::new(vectors, vec![Vec::new(); n], p).unwrap()
    }

    fn entry(id: u64, value: f64) -> GroupSummary {
        GroupSummary {
            group_id: GroupId(id),
            size: 1,
            vector: AvailabilityVector::uniform(value, 2),
        }
    }

    #[test]
    fn representative_is_last_joined_online_member() {
        let mut w = isolated(vec![v(&[0.5]), v(&[0.5])], params(6));
        assert_eq!(w.representative(GroupId(0)), Some(PeerId(0)));
        let g = w.merge_group(GroupId(0), GroupId(1)).unwrap();
        assert_eq!(w.representative(g), Some(PeerId(1)));
        w.set_online(vec![true, false]);
        assert_eq!(w.representative(g), Some(PeerId(0)));
        w.set_online(vec![false, false]);
        assert_eq!(w.representative(g), None);
    }

    #[test]
    fn representative_follows_join_stamps() {
        let w = isolated(vec![v(&[0.5]), v(&[0.5])], params(6));
        let mut peers = w.peers().to_vec();
        peers[0].join_order = 3;
        peers[1].join_order = 7;
        let group = Group {
            id: GroupId(9),
            members: peers
                .iter()
                .map(|p| RosterEntry {
                    peer: p.id,
                    base_vector: p.base_vector.clone(),
                })
                .collect(),
            vector: v(&[0.75]),
            locked: false,
            knownlist: KnownList::new(10),
        };
        assert_eq!(representative(&group, &peers, |_| true), Some(PeerId(1)));
        assert_eq!(representative(&group, &peers, |_| false), None);
    }

    #[test]
    fn explore_keeps_top_candidates() {
        // Scores rise with the candidate's distance from the owner's 0.5.
        let owner = GroupSummary {
            group_id: GroupId(0),
            size: 1,
            vector: AvailabilityVector::uniform(0.5, 2),
        };
        let p = ProtocolParams {
            knowncount: 2,
            ..params(6)
        };
        let bundle = Bundle {
            summary: entry(3, 0.9),
            knownlist: vec![entry(1, 0.7), entry(2, 0.95), entry(0, 0.1)],
        };
        let list = explore(&owner, &KnownList::new(2), &[bundle], &p, |_| true).unwrap();
        let ids: Vec<u64> = list.entries().iter().map(|e| e.group_id.0).collect();
        assert_eq!(ids, vec![2, 3]);
        assert!(!list.contains(GroupId(0)));
    }

    #[test]
    fn explore_breaks_ties_by_lower_id() {
        let owner = GroupSummary {
            group_id: GroupId(0),
            size: 1,
            vector: AvailabilityVector::uniform(0.5, 2),
        };
        let bundle = Bundle {
            summary: entry(7, 0.9),
            knownlist: vec![entry(4, 0.9)],
        };
        let list = explore(&owner, &KnownList::new(10), &[bundle], &params(6), |_| true).unwrap();
        let ids: Vec<u64> = list.entries().iter().map(|e| e.group_id.0).collect();
        assert_eq!(ids, vec![4, 7]);
    }

    #[test]
    fn explore_skips_oversize_and_missing() {
        let owner = GroupSummary {
            group_id: GroupId(0),
            size: 4,
            vector: AvailabilityVector::uniform(0.5, 2),
        };
        let mut big = entry(5, 0.9);
        big.size = 3;
        let bundle = Bundle {
            summary: entry(6, 0.8),
            knownlist: vec![big, entry(8, 0.2)],
        };
        let list = explore(&owner, &KnownList::new(10), &[bundle], &params(6), |g| g != GroupId(8)).unwrap();
        let ids: Vec<u64> = list.entries().iter().map(|e| e.group_id.0).collect();
        assert_eq!(ids, vec![6]);
    }

    #[test]
    fn neighbors_map_to_groups() {
        // peer 0 linked to 1, 2, 3 (three distinct singleton groups)
        let adj = vec![
            vec![PeerId(1), PeerId(2), PeerId(3)],
            vec![PeerId(0), PeerId(2)],
            vec![PeerId(0), PeerId(1)],
            vec![PeerId(0)],
        ];
        let mut w = World::new(vec![v(&[0.5]); 4], adj, params(6)).unwrap();
        let got: Vec<u64> = w.group_neighbors(GroupId(0)).into_iter().map(|g| g.0).collect();
        assert_eq!(got, vec![1, 2, 3]);
        // merging 1 and 2 hides their mutual link and unions their neighbours
        let g = w.merge_group(GroupId(1), GroupId(2)).unwrap();
        let got: Vec<GroupId> = w.group_neighbors(g).into_iter().collect();
        assert_eq!(got, vec![GroupId(0)]);
        let got: Vec<GroupId> = w.group_neighbors(GroupId(0)).into_iter().collect();
        assert_eq!(got, vec![GroupId(3), g]);
    }

    #[test]
    fn make_group_with_empty_list_is_noop() {
        let mut w = isolated(vec![v(&[0.9, 0.1]), v(&[0.1, 0.9])], params(6));
        assert_eq!(w.make_group(GroupId(0)).unwrap(), MergeOutcome::Unchanged);
        assert_eq!(w.group_count(), 2);
    }

    fn linked_pair(a: &[f64], b: &[f64], p: ProtocolParams) -> World {
        World::new(vec![v(a), v(b)], vec![vec![PeerId(1)], vec![PeerId(0)]], p).unwrap()
    }

    #[test]
    fn complementary_pair_merges() {
        let mut w = linked_pair(&[0.9, 0.1], &[0.1, 0.9], params(6));
        w.explore_group(GroupId(0)).unwrap();
        assert!(w.group(GroupId(0)).unwrap().knownlist.contains(GroupId(1)));
        assert!(w.group(GroupId(1)).unwrap().knownlist.contains(GroupId(0)));
        let out = w.make_group(GroupId(0)).unwrap();
        let MergeOutcome::Merged { new_group, .. } = out else {
            panic!("expected a merge, got {out:?}");
        };
        let g = w.group(new_group).unwrap();
        assert_eq!(g.size(), 2);
        assert!((g.vector.as_slice()[0] - 0.91).abs() < 1e-12);
        assert!((g.vector.as_slice()[1] - 0.91).abs() < 1e-12);
        assert!(w.group(GroupId(0)).is_none() && w.group(GroupId(1)).is_none());
        assert!(g.locked);
        w.end_round();
        assert!(w.check_invariants().is_empty());
    }

    #[test]
    fn first_acceptance_stops_the_walk() {
        // group 0 knows 1 (best) and 2; 1 accepts so 2 is never contacted
        let mut w = isolated(vec![v(&[0.9, 0.1]), v(&[0.1, 0.9]), v(&[0.2, 0.8])], params(6));
        let owner = w.summary(GroupId(0)).unwrap();
        let cands = vec![w.summary(GroupId(1)).unwrap(), w.summary(GroupId(2)).unwrap()];
        let p = *w.params();
        w.groups
            .get_mut(&GroupId(0))
            .unwrap()
            .knownlist
            .absorb(&owner, cands, &p, |_| true)
            .unwrap();
        let out = w.make_group(GroupId(0)).unwrap();
        assert!(matches!(
            out,
            MergeOutcome::Merged {
                invitee: GroupId(1),
                ..
            }
        ));
        assert_eq!(w.stats().invitations, 1);
        assert!(!w.group(GroupId(2)).unwrap().locked);
    }

    #[test]
    fn denial_moves_to_next_candidate() {
        let mut w = isolated(vec![v(&[0.9, 0.1]), v(&[0.1, 0.9]), v(&[0.2, 0.8])], params(6));
        let owner = w.summary(GroupId(0)).unwrap();
        let cands = vec![w.summary(GroupId(1)).unwrap(), w.summary(GroupId(2)).unwrap()];
        let p = *w.params();
        w.groups
            .get_mut(&GroupId(0))
            .unwrap()
            .knownlist
            .absorb(&owner, cands, &p, |_| true)
            .unwrap();
        w.groups.get_mut(&GroupId(1)).unwrap().locked = true;
        let out = w.make_group(GroupId(0)).unwrap();
        assert!(matches!(
            out,
            MergeOutcome::Merged {
                invitee: GroupId(2),
                ..
            }
        ));
        assert_eq!(w.stats().denials, 1);
        assert_eq!(w.stats().acceptances, 1);
    }

    #[test]
    fn stale_candidate_is_purged() {
        let mut w = isolated(vec![v(&[0.9, 0.1]), v(&[0.1, 0.9]), v(&[0.2, 0.8])], params(6));
        let owner = w.summary(GroupId(0)).unwrap();
        let cands = vec![w.summary(GroupId(1)).unwrap()];
        let p = *w.params();
        w.groups
            .get_mut(&GroupId(0))
            .unwrap()
            .knownlist
            .absorb(&owner, cands, &p, |_| true)
            .unwrap();
        w.merge_group(GroupId(1), GroupId(2)).unwrap();
        assert_eq!(w.make_group(GroupId(0)).unwrap(), MergeOutcome::Unchanged);
        assert!(w.group(GroupId(0)).unwrap().knownlist.is_empty());
        assert_eq!(w.stats().stale_candidates, 1);
    }

    #[test]
    fn reply_rules() {
        let mut w = isolated(vec![v(&[0.5]); 7], params(6));
        w.merge_group(GroupId(0), GroupId(1)).unwrap(); // id 7, size 2
        w.merge_group(GroupId(2), GroupId(3)).unwrap(); // id 8, size 2
        w.merge_group(GroupId(8), GroupId(4)).unwrap(); // id 9, size 3
        w.end_round();
        let invitee = GroupId(9);
        // seed a competing candidate worth 0.7
        let g = w.groups.get_mut(&invitee).unwrap();
        g.knownlist.entries.push(KnownEntry {
            group_id: GroupId(5),
            size: 1,
            vector: v(&[0.5]),
            contribution: Contribution {
                value: 0.7,
                metric: Metric::RatioExponent,
            },
        });
        let offer = |value| Contribution {
            value,
            metric: Metric::RatioExponent,
        };
        let two = GroupSummary {
            group_id: GroupId(7),
            size: 2,
            vector: v(&[0.75]),
        };
        let four = GroupSummary { size: 4, ..two.clone() };
        assert_eq!(w.reply_invitation(invitee, &four, offer(0.9)), Message::Denial);
        assert_eq!(w.reply_invitation(invitee, &two, offer(0.6)), Message::Denial);
        assert_eq!(w.reply_invitation(invitee, &two, offer(0.9)), Message::Acceptance);
        // now locked
        assert_eq!(w.reply_invitation(invitee, &two, offer(0.9)), Message::Denial);
    }

    #[test]
    fn inviter_entry_does_not_block_acceptance() {
        let mut w = linked_pair(&[0.9, 0.1], &[0.1, 0.9], params(6));
        w.explore_group(GroupId(0)).unwrap();
        let inviter = w.summary(GroupId(0)).unwrap();
        let c = w.group(GroupId(1)).unwrap().knownlist.entries()[0].contribution;
        assert_eq!(w.reply_invitation(GroupId(1), &inviter, c), Message::Acceptance);
    }

    #[test]
    fn offline_invitee_denies_without_change() {
        let mut w = linked_pair(&[0.9, 0.1], &[0.1, 0.9], params(6));
        w.explore_group(GroupId(0)).unwrap();
        w.set_online(vec![true, false]);
        let before = w.group(GroupId(1)).unwrap().clone();
        assert_eq!(w.make_group(GroupId(0)).unwrap(), MergeOutcome::Unchanged);
        assert_eq!(w.group(GroupId(1)).unwrap(), &before);
    }

    #[test]
    fn merge_roster_and_join_order() {
        let mut w = isolated(vec![v(&[0.5]); 5], params(6));
        let a = w.merge_group(GroupId(0), GroupId(1)).unwrap();
        let b = w.merge_group(GroupId(2), GroupId(3)).unwrap();
        let b = w.merge_group(b, GroupId(4)).unwrap();
        let c = w.merge_group(a, b).unwrap();
        let g = w.group(c).unwrap();
        let roster: Vec<u32> = g.members.iter().map(|m| m.peer.0).collect();
        assert_eq!(roster, vec![0, 1, 2, 3, 4]);
        let stamps: Vec<u64> = roster.iter().map(|p| w.peer(PeerId(*p)).join_order).collect();
        assert!(stamps.windows(2).all(|s| s[0] < s[1]));
        for old in [a, b, GroupId(0), GroupId(4)] {
            assert!(w.group(old).is_none());
        }
        assert!(c.0 > b.0);
        assert_eq!(
            w.merge_group(c, GroupId(99)),
            Err(ProtocolError::UnknownGroup(GroupId(99)))
        );
    }

    #[test]
    fn merge_respects_cap() {
        let mut w = isolated(vec![v(&[0.5]); 3], params(2));
        let g = w.merge_group(GroupId(0), GroupId(1)).unwrap();
        assert_eq!(
            w.merge_group(g, GroupId(2)),
            Err(ProtocolError::SizeExceeded { size: 3, max: 2 })
        );
    }

    #[test]
    fn merged_knownlist_drops_parents() {
        let adj = vec![
            vec![PeerId(1), PeerId(2)],
            vec![PeerId(0), PeerId(2)],
            vec![PeerId(0), PeerId(1)],
        ];
        let mut w = World::new(vec![v(&[0.9, 0.1]), v(&[0.1, 0.9]), v(&[0.5, 0.6])], adj, params(6)).unwrap();
        for id in w.group_ids() {
            w.explore_group(id).unwrap();
        }
        let g = w.merge_group(GroupId(0), GroupId(1)).unwrap();
        let list = &w.group(g).unwrap().knownlist;
        assert!(!list.contains(GroupId(0)) && !list.contains(GroupId(1)));
        assert!(list.contains(GroupId(2)));
        let expected = contribution(
            Metric::RatioExponent,
            &w.summary(g).unwrap(),
            &w.summary(GroupId(2)).unwrap(),
        )
        .unwrap();
        assert_eq!(list.entries()[0].contribution, expected);
    }

    #[test]
    fn leave_recomputes_vector() {
        let mut w = isolated(vec![v(&[0.9, 0.1]), v(&[0.1, 0.9])], params(6));
        let g = w.merge_group(GroupId(0), GroupId(1)).unwrap();
        let out = w.leave_group(g, PeerId(1), v(&[0.3, 0.3])).unwrap();
        assert_eq!(out.remaining, Some(g));
        assert!(w.group(g).unwrap().vector.max_abs_diff(&v(&[0.9, 0.1])).unwrap() < 1e-15);
        let s = w.group(out.singleton).unwrap();
        assert_eq!(s.vector, v(&[0.3, 0.3]));
        assert_eq!(w.peer(PeerId(1)).group, out.singleton);
        assert!(s.knownlist.is_empty());
        assert!(w.check_invariants().is_empty());
    }

    #[test]
    fn leaving_singleton_dissolves() {
        let mut w = isolated(vec![v(&[0.9, 0.1])], params(6));
        let out = w.leave_group(GroupId(0), PeerId(0), v(&[0.2, 0.2])).unwrap();
        assert_eq!(out.remaining, None);
        assert!(w.group(GroupId(0)).is_none());
        assert_eq!(w.peer(PeerId(0)).base_vector, v(&[0.2, 0.2]));
        assert_eq!(w.group_count(), 1);
    }

    #[test]
    fn leave_from_three_matches_enumeration() {
        let mut w = isolated(vec![v(&[0.6]), v(&[0.3]), v(&[0.8])], params(6));
        let g = w.merge_group(GroupId(0), GroupId(1)).unwrap();
        let g = w.merge_group(g, GroupId(2)).unwrap();
        w.leave_group(g, PeerId(1), v(&[0.5])).unwrap();
        // four outcomes of peers 0 and 2; only "both off" fails
        let expected = 0.6 * 0.8 + 0.6 * 0.2 + 0.4 * 0.8;
        assert!((w.group(g).unwrap().vector.as_slice()[0] - expected).abs() < 1e-12);
        assert_eq!(
            w.leave_group(g, PeerId(1), v(&[0.5])),
            Err(ProtocolError::NotAMember {
                group: g,
                peer: PeerId(1)
            })
        );
    }

    #[test]
    fn end_round_sweeps_retired_and_unlocks() {
        let mut w = linked_pair(&[0.9, 0.1], &[0.1, 0.9], params(6));
        w.explore_group(GroupId(0)).unwrap();
        let g = w.merge_group(GroupId(0), GroupId(1)).unwrap();
        assert!(w.group(g).unwrap().locked);
        w.end_round();
        assert!(!w.group(g).unwrap().locked);
        assert!(w.check_invariants().is_empty());
    }
}
