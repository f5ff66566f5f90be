//! Lexical prefix tree over phoneme sequences.

use crate::error::{Error, Result};
use crate::inventory::PhonemeId;
use crate::lexicon::{Lexicon, WordId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

pub const ROOT: NodeId = NodeId(0);

#[derive(Clone, Debug)]
pub struct TreeNode {
    /// Phoneme on the arc into this node; `None` only for the root.
    pub phone: Option<PhonemeId>,
    pub parent: Option<NodeId>,
    /// Sorted by phoneme index.
    pub children: Vec<(PhonemeId, NodeId)>,
    /// Words whose pronunciation ends exactly here, in lexicon order.
    pub words: Vec<WordId>,
}

#[derive(Clone, Debug)]
pub struct PrefixTree {
    nodes: Vec<TreeNode>,
}

impl PrefixTree {
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id.0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn child(&self, id: NodeId, phone: PhonemeId) -> Option<NodeId> {
        let children = &self.nodes[id.0].children;
        children
            .binary_search_by_key(&phone, |&(p, _)| p)
            .ok()
            .map(|i| children[i].1)
    }

    /// Follows `phones` from the root.
    pub fn walk(&self, phones: &[PhonemeId]) -> Option<NodeId> {
        phones.iter().try_fold(ROOT, |node, &p| self.child(node, p))
    }
}

pub fn build_prefix_tree(lexicon: &Lexicon) -> Result<PrefixTree> {
    if lexicon.is_empty() {
        return Err(Error::EmptyLexicon);
    }
    let mut nodes = vec![TreeNode {
        phone: None,
        parent: None,
        children: Vec::new(),
        words: Vec::new(),
    }];
    for pron in lexicon.pronunciations() {
        let mut cur = ROOT;
        for &phone in &pron.phones {
            let children = &nodes[cur.0].children;
            cur = match children.binary_search_by_key(&phone, |&(p, _)| p) {
                Ok(i) => children[i].1,
                Err(i) => {
                    let id = NodeId(nodes.len());
                    nodes[cur.0].children.insert(i, (phone, id));
                    nodes.push(TreeNode {
                        phone: Some(phone),
                        parent: Some(cur),
                        children: Vec::new(),
                        words: Vec::new(),
                    });
                    id
                }
            };
        }
        let words = &mut nodes[cur.0].words;
        if !words.contains(&pron.word) {
            words.push(pron.word);
        }
    }
    Ok(PrefixTree { nodes })
}
